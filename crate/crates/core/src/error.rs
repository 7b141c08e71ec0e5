use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("linear solve failed (residual {residual:e}): {reason}")]
    Solver { residual: f64, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("step size too large: {0}")]
    StepSize(String),

    /// A pairing or set operation the probability calculus leaves undefined.
    #[error("undefined by the theory: {0}")]
    Undefined(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
