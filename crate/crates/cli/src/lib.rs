//! Command-line experiment runner for `revdiff`.
//!
//! Every command writes CSV datasets and a `report.json` into the output
//! directory and prints a one-line-per-assertion summary.
//!
//! Exit status: 0 when every assertion passes, 1 when one fails, 2 for
//! usage and configuration errors, 3 for numerical or I/O failures during
//! a run.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

pub mod config;
pub mod experiments;
pub mod report;

use config::{load_config, ConfigError, SimConfig};
use report::Report;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] revdiff::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Usage(_) => 2,
            RunError::Core(_) | RunError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "revdiff", version, about = "Reversible-diffusion quantum mechanics experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// TOML configuration file; omitted sections take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides REVDIFF_OUT and `out_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 picks one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Override any configuration key, e.g. `--set grid.n=4096`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Unitarity and energy of Crank–Nicolson evolution.
    Evolve,
    /// Schrödinger round trip, backward evolution and velocity reversal.
    Reversal,
    /// The same reversal protocol applied to the heat equation.
    HeatContrast,
    /// Current and osmotic velocities, quantum potential, Newton residuals.
    Hydro,
    /// Forward and backward walker ensembles and path roughness.
    Walkers,
    /// Position probabilities as ε-limits of forward/backward intersections.
    Born,
    /// Eigenbasis probabilities and cross terms in the infinite well.
    EigenBorn,
    /// Four-term decomposition of a two-slit screen pattern.
    DoubleSlit,
    /// Complex-valued event measures and the hyper-sample space.
    Eventcalc {
        /// Measure of the forward event, e.g. `0.6+0.3i`.
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
    },
    /// Two-level pairing table and exclusivity checks.
    Spin {
        #[arg(long, allow_hyphen_values = true)]
        c1: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        c2: Option<String>,
        /// Rescale (c1, c2) to unit norm instead of rejecting it.
        #[arg(long)]
        normalize: bool,
    },
    /// Every experiment, one subdirectory each, plus a combined report.
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Reversal => "reversal",
            Command::HeatContrast => "heat-contrast",
            Command::Hydro => "hydro",
            Command::Walkers => "walkers",
            Command::Born => "born",
            Command::EigenBorn => "eigen-born",
            Command::DoubleSlit => "double-slit",
            Command::Eventcalc { .. } => "eventcalc",
            Command::Spin { .. } => "spin",
            Command::All => "all",
        }
    }

    fn overrides(&self) -> Vec<String> {
        let quoted = |k: &str, v: &str| format!("{k}=\"{v}\"");
        let mut out = Vec::new();
        match self {
            Command::Eventcalc { z: Some(z) } => out.push(quoted("eventcalc.z", z)),
            Command::Spin { c1, c2, normalize } => {
                if let Some(c) = c1 {
                    out.push(quoted("spin.c1", c));
                }
                if let Some(c) = c2 {
                    out.push(quoted("spin.c2", c));
                }
                if *normalize {
                    out.push("spin.normalize=true".into());
                }
            }
            _ => {}
        }
        out
    }
}

fn command_with_defaults() -> clap::Command {
    let defaults = toml::to_string(&SimConfig::default()).unwrap_or_default();
    Cli::command().after_long_help(format!("Configuration defaults:\n\n{defaults}"))
}

/// Resolves flags, environment and file into one configuration.
pub fn resolve_config(cli: &Cli) -> Result<SimConfig, RunError> {
    let mut sets = cli.set.clone();
    if let Some(seed) = cli.seed {
        sets.push(format!("seed={seed}"));
    }
    if let Some(cmd) = &cli.command {
        sets.extend(cmd.overrides());
    }
    let mut cfg = load_config(cli.config.as_deref(), &sets)?;
    if let Ok(dir) = std::env::var("REVDIFF_OUT") {
        if !dir.is_empty() {
            cfg.out_dir = dir.into();
        }
    }
    if let Some(dir) = &cli.out {
        cfg.out_dir = dir.clone();
    }
    if let Some(cmd) = &cli.command {
        cfg.experiment = cmd.name().to_string();
    }
    Ok(cfg)
}

/// Runs the configured experiment and writes its report.
pub fn execute(cfg: &SimConfig, threads: usize) -> Result<Report, RunError> {
    let name = cfg.experiment.as_str();
    if name != "all" && !experiments::COMMANDS.contains(&name) {
        return Err(RunError::Usage(format!("unknown experiment `{name}`")));
    }
    let go = || -> Result<Report, RunError> {
        let start = Instant::now();
        let mut r = if name == "all" {
            experiments::run_all(cfg, &cfg.out_dir)?
        } else {
            experiments::run_named(name, cfg, &cfg.out_dir)?
        };
        r.wall_time = start.elapsed().as_secs_f64();
        std::fs::create_dir_all(&cfg.out_dir)?;
        r.write(&cfg.out_dir)?;
        Ok(r)
    };
    if threads == 0 {
        go()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| RunError::Usage(format!("cannot start {threads} threads: {e}")))?;
        pool.install(go)
    }
}

/// Full entry point: parses `argv` (program name first), runs, prints and
/// returns the exit status.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let matches = match command_with_defaults().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return 2;
        }
    };
    let result = resolve_config(&cli).and_then(|cfg| {
        let r = execute(&cfg, cli.threads)?;
        if cfg.experiment == "spin" {
            let _ = write!(out, "{}", experiments::spin_table(&experiments::spin_state_of(&cfg)?)?);
        }
        Ok((cfg, r))
    });
    match result {
        Ok((cfg, r)) => {
            let _ = write!(out, "{}", r.summary());
            let _ = writeln!(out, "report: {}", cfg.out_dir.join("report.json").display());
            let _ = writeln!(out, "wall time: {:.2} s", r.wall_time);
            let failed = r.failures();
            if failed.is_empty() {
                0
            } else {
                for a in failed {
                    let _ = writeln!(err, "assertion failed: {} = {:e} (bound {:e})", a.name, a.value, a.bound);
                }
                1
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
