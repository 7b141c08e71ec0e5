//! Machine-readable run report.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Below,
    Above,
    AtLeast,
    AtMost,
    Holds,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    /// Threshold; for boolean checks, 1.
    pub bound: f64,
    pub kind: Bound,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub config_echo: serde_json::Value,
    /// Seconds; excluded from the determinism contract.
    #[serde(default)]
    pub wall_time: f64,
    pub metrics: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    /// Datasets written next to the report, relative to it.
    #[serde(default)]
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(experiment: &str, config_echo: serde_json::Value) -> Self {
        Self { experiment: experiment.to_string(), config_echo, ..Default::default() }
    }

    pub fn metric(&mut self, name: &str, value: f64) -> f64 {
        self.metrics.insert(name.to_string(), value);
        value
    }

    fn push(&mut self, name: &str, value: f64, bound: f64, kind: Bound, pass: bool) {
        self.metric(name, value);
        self.assertions.push(Assertion { name: name.to_string(), value, bound, kind, pass });
    }

    /// `value < bound`; NaN fails.
    pub fn below(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, bound, Bound::Below, value < bound);
    }

    /// `value > bound`; NaN fails.
    pub fn above(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, bound, Bound::Above, value > bound);
    }

    pub fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, bound, Bound::AtLeast, value >= bound);
    }

    pub fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, bound, Bound::AtMost, value <= bound);
    }

    pub fn holds(&mut self, name: &str, ok: bool) {
        self.push(name, if ok { 1.0 } else { 0.0 }, 1.0, Bound::Holds, ok);
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.pass).collect()
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    /// Folds a sub-report in, prefixing its names with `prefix.`.
    pub fn absorb(&mut self, prefix: &str, sub: Report) {
        for (k, v) in sub.metrics {
            self.metrics.insert(format!("{prefix}.{k}"), v);
        }
        for mut a in sub.assertions {
            a.name = format!("{prefix}.{}", a.name);
            self.assertions.push(a);
        }
        for f in sub.artifacts {
            self.artifacts.push(format!("{prefix}/{f}"));
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("report.json"), text + "\n")
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?).map_err(std::io::Error::other)
    }

    /// Human summary, one line per assertion.
    pub fn summary(&self) -> String {
        let mut s = format!("{}: {} metrics, {} assertions\n", self.experiment, self.metrics.len(), self.assertions.len());
        for a in &self.assertions {
            let rel = match a.kind {
                Bound::Below => "<",
                Bound::Above => ">",
                Bound::AtLeast => ">=",
                Bound::AtMost => "<=",
                Bound::Holds => "==",
            };
            s += &format!("  [{}] {} = {:.6e} ({} {:e})\n", if a.pass { "pass" } else { "FAIL" }, a.name, a.value, rel, a.bound);
        }
        s
    }
}
