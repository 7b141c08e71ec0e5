//! Forward/backward complex diffusion on a 1-D lattice.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below are what the experiment runner uses.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod borncalc;
pub mod error;
pub mod eventcalc;
pub mod evolve;
pub mod hydro;
pub mod lattice;
pub mod richardson;
pub mod scalar;
pub mod slit;
pub mod spin;
pub mod states;
pub mod stats;
pub mod tridiag;
pub mod walkers;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

pub type Grid64 = lattice::Grid<f64>;
pub type ComplexField64 = lattice::ComplexField<f64>;
pub type RealField64 = lattice::RealField<f64>;
pub type Interval64 = lattice::Interval<f64>;
pub type TimeWindow64 = evolve::TimeWindow<f64>;
pub type Potential64 = evolve::Potential<f64>;
pub type FieldHistory64 = evolve::FieldHistory<f64>;

pub type Grid32 = lattice::Grid<f32>;
pub type ComplexField32 = lattice::ComplexField<f32>;
