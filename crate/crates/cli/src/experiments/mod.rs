//! One function per command. Each returns a [`Report`] and writes its CSV
//! datasets into the output directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use revdiff::borncalc::EpsSchedule;
use revdiff::evolve::{Potential, TimeWindow};
use revdiff::lattice::{ComplexField, Grid};
use revdiff::{states, Grid64, Potential64};

use crate::config::{PotentialKind, SimConfig};
use crate::report::Report;
use crate::RunError;

mod algebra;
mod born;
mod fields;
mod slit;
mod walkers;

pub use algebra::{eventcalc, spin, spin_state_of, spin_table};
pub use born::{born, eigen_born};
pub use fields::{evolve, heat_contrast, hydro, reversal};
pub use slit::double_slit;
pub use walkers::walkers;

pub const COMMANDS: [&str; 10] = [
    "evolve",
    "reversal",
    "heat-contrast",
    "hydro",
    "walkers",
    "born",
    "eigen-born",
    "double-slit",
    "eventcalc",
    "spin",
];

pub struct Ctx<'a> {
    pub cfg: &'a SimConfig,
    pub out: PathBuf,
}

impl Ctx<'_> {
    pub fn report(&self, name: &str) -> Report {
        Report::new(name, serde_json::to_value(self.cfg).unwrap_or_default())
    }

    pub fn grid(&self) -> Result<Grid64, RunError> {
        let g = &self.cfg.grid;
        Ok(Grid::new(g.x_min, g.x_max, g.n)?)
    }

    pub fn well_grid(&self) -> Result<Grid64, RunError> {
        Ok(Grid::new(0.0, 1.0, self.cfg.well.n)?)
    }

    pub fn window(&self) -> Result<TimeWindow<f64>, RunError> {
        Ok(TimeWindow::new(self.cfg.window.t0, self.cfg.window.n_steps)?)
    }

    pub fn potential(&self, g: Grid64) -> Result<Potential64, RunError> {
        Ok(match self.cfg.potential.kind {
            PotentialKind::Free => Potential::free(g),
            PotentialKind::Harmonic => Potential::harmonic(g, self.cfg.potential.omega, self.cfg.mass)?,
        })
    }

    pub fn packet(&self, g: Grid64) -> Result<ComplexField<f64>, RunError> {
        let s = &self.cfg.state;
        Ok(states::gaussian(g, s.x0, s.sigma, s.k)?)
    }

    pub fn schedule(&self, g: &Grid64) -> Result<EpsSchedule<f64>, RunError> {
        Ok(EpsSchedule::geometric(g, self.cfg.eps.cells0, self.cfg.eps.levels)?)
    }

    pub fn csv(&self, name: &str) -> Result<BufWriter<File>, RunError> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    /// Independent generator per experiment, keyed by the run seed.
    pub fn rng(&self, tag: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.cfg.seed.to_le_bytes());
        key[8..16].copy_from_slice(&tag.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

pub fn run_named(name: &str, cfg: &SimConfig, out: &Path) -> Result<Report, RunError> {
    std::fs::create_dir_all(out)?;
    let ctx = Ctx { cfg, out: out.to_path_buf() };
    let mut report = match name {
        "evolve" => evolve(&ctx),
        "reversal" => reversal(&ctx),
        "heat-contrast" => heat_contrast(&ctx),
        "hydro" => hydro(&ctx),
        "walkers" => walkers(&ctx),
        "born" => born(&ctx),
        "eigen-born" => eigen_born(&ctx),
        "double-slit" => double_slit(&ctx),
        "eventcalc" => eventcalc(&ctx),
        "spin" => spin(&ctx),
        other => Err(RunError::Usage(format!("unknown experiment `{other}`"))),
    }?;
    report.artifacts = artifacts(out)?;
    Ok(report)
}

/// Files in `dir` other than the report, sorted.
fn artifacts(dir: &Path) -> Result<Vec<String>, RunError> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type()?.is_file() && name != "report.json" {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

/// Every experiment in turn, each in its own subdirectory; the combined
/// report prefixes names with the experiment.
pub fn run_all(cfg: &SimConfig, out: &Path) -> Result<Report, RunError> {
    let mut all = Report::new("all", serde_json::to_value(cfg).unwrap_or_default());
    for name in COMMANDS {
        let r = run_named(name, cfg, &out.join(name))?;
        r.write(&out.join(name))?;
        all.absorb(name, r);
    }
    Ok(all)
}
