//! Run records, CSV tables and the manifest.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::spec::ExperimentSpec;

/// A CSV table; floats are written as shortest round-trip decimals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

/// Shortest round-trip digits; exponent form outside `[1e-4, 1e16)` keeps cells short.
fn render_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => render_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::record::Cell::from($x)),*]
    };
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        Ok(w.into_inner()?)
    }
}

/// One acceptance assertion of a mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, requirement: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            value,
            requirement: requirement.into(),
            pass,
        }
    }

    /// `lo <= value <= hi`.
    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, value, format!("in [{lo}, {hi}]"), value >= lo && value <= hi)
    }

    pub fn at_most(name: &str, value: f64, hi: f64) -> Self {
        Self::new(name, value, format!("<= {hi}"), value <= hi)
    }

    pub fn at_least(name: &str, value: f64, lo: f64) -> Self {
        Self::new(name, value, format!(">= {lo}"), value >= lo)
    }

    pub fn below(name: &str, value: f64, hi: f64) -> Self {
        Self::new(name, value, format!("< {hi}"), value < hi)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub spec: ExperimentSpec,
    pub tables: Vec<Table>,
    pub summary: Map<String, Value>,
    pub checks: Vec<Check>,
    /// Thresholds fixed by pilot runs rather than taken from theory.
    pub calibrated: Map<String, Value>,
    /// Trial errors, one message each.
    pub failures: Vec<String>,
    pub wall_clock_s: f64,
    pub version: String,
}

impl RunRecord {
    pub fn new(spec: &ExperimentSpec) -> Self {
        Self {
            spec: spec.clone(),
            tables: Vec::new(),
            summary: Map::new(),
            checks: Vec::new(),
            calibrated: Map::new(),
            failures: Vec::new(),
            wall_clock_s: 0.0,
            version: crate::VERSION_TAG.to_string(),
        }
    }

    pub fn summarize(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    pub fn calibrate(&mut self, key: &str, value: impl Serialize) {
        self.calibrated.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn within_budget(&self) -> bool {
        self.failures.len() <= self.spec.failure_budget
    }

    pub fn passed(&self) -> bool {
        self.within_budget() && self.checks.iter().all(|c| c.pass)
    }

    /// Manifest JSON: spec, summary, checks, calibrated constants and versions.
    pub fn manifest(&self) -> Value {
        serde_json::json!({
            "mode": self.spec.mode.name(),
            "spec": self.spec,
            "summary": self.summary,
            "checks": self.checks,
            "passed": self.passed(),
            "calibrated": self.calibrated,
            "failures": self.failures,
            "wall_clock_s": self.wall_clock_s,
            "version": self.version,
            "libraries": crate::LIBRARIES,
            "tables": self.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
        }
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest())?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
