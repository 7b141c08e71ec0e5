//! TOML experiment configuration.
//!
//! Every section is optional; missing keys take the defaults below and
//! unknown keys are rejected by name.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub experiment: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub mass: f64,
    pub grid: GridSection,
    pub window: WindowSection,
    pub potential: PotentialSection,
    pub state: StateSection,
    pub well: WellSection,
    pub eps: EpsSection,
    pub born: BornSection,
    pub heat: HeatSection,
    pub walker: WalkerSection,
    pub slit: SlitSection,
    pub eventcalc: EventcalcSection,
    pub spin: SpinSection,
    pub output: OutputSection,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            experiment: "all".into(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            mass: 1.0,
            grid: GridSection::default(),
            window: WindowSection::default(),
            potential: PotentialSection::default(),
            state: StateSection::default(),
            well: WellSection::default(),
            eps: EpsSection::default(),
            born: BornSection::default(),
            heat: HeatSection::default(),
            walker: WalkerSection::default(),
            slit: SlitSection::default(),
            eventcalc: EventcalcSection::default(),
            spin: SpinSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { x_min: -20.0, x_max: 20.0, n: 2048 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSection {
    pub t0: f64,
    pub n_steps: usize,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self { t0: 1.0, n_steps: 1000 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Free,
    Harmonic,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    pub omega: f64,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self { kind: PotentialKind::Free, omega: 1.0 }
    }
}

/// Initial Gaussian packet.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct StateSection {
    pub x0: f64,
    pub sigma: f64,
    pub k: f64,
}

impl Default for StateSection {
    fn default() -> Self {
        Self { x0: -1.0, sigma: 1.0, k: 1.5 }
    }
}

/// Infinite well on `[0, 1]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WellSection {
    pub n: usize,
    pub modes: usize,
}

impl Default for WellSection {
    fn default() -> Self {
        Self { n: 2049, modes: 64 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EpsSection {
    /// Widest ε in grid cells; halved at each level.
    pub cells0: usize,
    pub levels: usize,
}

impl Default for EpsSection {
    fn default() -> Self {
        Self { cells0: 16, levels: 4 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BornSection {
    pub f_lo: f64,
    pub f_hi: f64,
    pub random_intervals: usize,
}

impl Default for BornSection {
    fn default() -> Self {
        Self { f_lo: 0.0, f_hi: 0.5, random_intervals: 10 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct HeatSection {
    pub d: f64,
    /// Relative amplitude of the uniform noise on the initial density.
    pub noise: f64,
}

impl Default for HeatSection {
    fn default() -> Self {
        Self { d: 0.5, noise: 0.05 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WalkerSection {
    pub n: usize,
    pub t_c: f64,
    pub bins: usize,
    /// Walkers per mass in the roughness sweep.
    pub n_roughness: usize,
    pub masses: Vec<f64>,
    /// Walkers for the screen cross-check of the double slit (0 skips it).
    pub n_slit: usize,
}

impl Default for WalkerSection {
    fn default() -> Self {
        Self { n: 100_000, t_c: 0.5, bins: 161, n_roughness: 10_000, masses: vec![1.0, 10.0, 100.0], n_slit: 100_000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SlitSection {
    pub d: f64,
    pub sigma: f64,
    pub k: f64,
    pub t_screen: f64,
    pub bins: usize,
    pub screen_lo: f64,
    pub screen_hi: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub n_steps: usize,
}

impl Default for SlitSection {
    fn default() -> Self {
        Self {
            d: 5.0,
            sigma: 0.25,
            k: 0.0,
            t_screen: 2.0,
            bins: 20,
            screen_lo: -10.0,
            screen_hi: 10.0,
            x_min: -40.0,
            x_max: 40.0,
            n: 4096,
            n_steps: 1000,
        }
    }
}

/// A complex number written as a TOML number or a string such as
/// `"0.6+0.3i"`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ComplexText {
    Real(f64),
    Text(String),
}

impl ComplexText {
    pub fn parse(&self, key: &str) -> Result<Complex64, ConfigError> {
        match self {
            ComplexText::Real(x) => Ok(Complex64::new(*x, 0.0)),
            ComplexText::Text(s) => parse_complex(s).ok_or_else(|| invalid(key, format!("`{s}` is not a complex number"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EventcalcSection {
    pub z: ComplexText,
    pub samples: usize,
}

impl Default for EventcalcSection {
    fn default() -> Self {
        Self { z: ComplexText::Text("0.6+0.3i".into()), samples: 1000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SpinSection {
    pub c1: ComplexText,
    pub c2: ComplexText,
    pub normalize: bool,
    pub samples: usize,
}

impl Default for SpinSection {
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { c1: ComplexText::Real(h), c2: ComplexText::Text(format!("{h}i")), normalize: false, samples: 100 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Field snapshots are written every this many steps.
    pub every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { every: 100 }
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also `i`, `-i`, `a+i`).
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&j| (bytes[j] == b'+' || bytes[j] == b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(j) => (&body[..j], &body[j..]),
        None => ("", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse().ok()?,
    };
    let re = if re.is_empty() { 0.0 } else { re.parse().ok()? };
    Some(Complex64::new(re, im))
}

/// Applies `key.path=value` overrides to a parsed table. Values are read as
/// TOML and fall back to plain strings.
pub fn apply_overrides(table: &mut Table, sets: &[String]) -> Result<(), ConfigError> {
    for s in sets {
        let (key, raw) = s.split_once('=').ok_or_else(|| ConfigError::Parse(format!("override `{s}` is not key=value")))?;
        let key = key.trim();
        let value = match format!("v = {raw}").parse::<Table>() {
            Ok(mut t) => t.remove("v").unwrap_or(Value::String(raw.to_string())),
            Err(_) => Value::String(raw.trim().to_string()),
        };
        let parts: Vec<&str> = key.split('.').collect();
        let mut cur = &mut *table;
        for p in &parts[..parts.len() - 1] {
            let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
            cur = entry.as_table_mut().ok_or_else(|| invalid(key, format!("`{p}` is not a section")))?;
        }
        cur.insert(parts[parts.len() - 1].to_string(), value);
    }
    Ok(())
}

pub fn parse_config(text: &str, sets: &[String]) -> Result<SimConfig, ConfigError> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    apply_overrides(&mut table, sets)?;
    let cfg: SimConfig = Table::try_into(table).map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: Option<&Path>, sets: &[String]) -> Result<SimConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.to_path_buf(), source })?,
        None => String::new(),
    };
    parse_config(&text, sets)
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |key: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(invalid(key, format!("{v} must be positive"))) };
        if self.grid.n < 8 {
            return Err(invalid("grid.n", format!("{} < 8 nodes", self.grid.n)));
        }
        if !(self.grid.x_max > self.grid.x_min) {
            return Err(invalid("grid.x_max", "must exceed grid.x_min"));
        }
        pos("window.t0", self.window.t0)?;
        if self.window.n_steps == 0 {
            return Err(invalid("window.n_steps", "must be at least 1"));
        }
        pos("mass", self.mass)?;
        pos("state.sigma", self.state.sigma)?;
        pos("potential.omega", self.potential.omega)?;
        if self.well.n < 8 {
            return Err(invalid("well.n", format!("{} < 8 nodes", self.well.n)));
        }
        if self.well.modes < 2 {
            return Err(invalid("well.modes", "need at least two modes"));
        }
        if self.eps.levels == 0 || self.eps.cells0 >> (self.eps.levels - 1) < 2 || !self.eps.cells0.is_multiple_of(1 << (self.eps.levels - 1)) {
            return Err(invalid("eps.cells0", "must halve to a whole number ≥ 2 at every level"));
        }
        if !(self.born.f_hi > self.born.f_lo) {
            return Err(invalid("born.f_hi", "must exceed born.f_lo"));
        }
        pos("heat.d", self.heat.d)?;
        if !(self.heat.noise >= 0.0 && self.heat.noise < 1.0) {
            return Err(invalid("heat.noise", "must lie in [0, 1)"));
        }
        if !(self.walker.t_c >= 0.0 && self.walker.t_c <= self.window.t0) {
            return Err(invalid("walker.t_c", "must lie inside the window"));
        }
        if self.walker.n == 0 {
            return Err(invalid("walker.n", "must be at least 1"));
        }
        if self.walker.bins < 8 {
            return Err(invalid("walker.bins", "need at least 8 bins"));
        }
        if let Some(m) = self.walker.masses.iter().find(|m| !(**m > 0.0)) {
            return Err(invalid("walker.masses", format!("{m} is not positive")));
        }
        pos("slit.sigma", self.slit.sigma)?;
        pos("slit.t_screen", self.slit.t_screen)?;
        if !(self.slit.d >= 0.0) {
            return Err(invalid("slit.d", "must be non-negative"));
        }
        if self.slit.n < 8 || self.slit.bins == 0 || self.slit.n_steps == 0 {
            return Err(invalid("slit", "n ≥ 8, bins ≥ 1 and n_steps ≥ 1 required"));
        }
        if !(self.slit.screen_hi > self.slit.screen_lo) || !(self.slit.x_max > self.slit.x_min) {
            return Err(invalid("slit.screen_hi", "ranges must be increasing"));
        }
        self.eventcalc.z.parse("eventcalc.z")?;
        self.spin.c1.parse("spin.c1")?;
        self.spin.c2.parse("spin.c2")?;
        if self.output.every == 0 {
            return Err(invalid("output.every", "must be at least 1"));
        }
        Ok(())
    }
}
