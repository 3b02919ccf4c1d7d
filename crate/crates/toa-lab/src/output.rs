//! Experiment results and their on-disk form: `series-*.csv`, `summary.json`, `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

/// A table written as `series-<name>.csv`; column headers carry their unit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|(c, u)| (c.to_string(), u.to_string())).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|(c, _)| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Below,
    Above,
    Within,
    Holds,
}

/// One physics check with its measured value and tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub measured: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn below(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), relation: Relation::Below, measured, target: None, tolerance: limit, passed: measured < limit }
    }

    pub fn above(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), relation: Relation::Above, measured, target: None, tolerance: limit, passed: measured > limit }
    }

    pub fn within(name: &str, measured: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            relation: Relation::Within,
            measured,
            target: Some(target),
            tolerance: tol,
            passed: (measured - target).abs() <= tol,
        }
    }

    /// A boolean property; `measured` is the number of violations.
    pub fn holds(name: &str, violations: usize) -> Self {
        Self { name: name.into(), relation: Relation::Holds, measured: violations as f64, target: None, tolerance: 0.0, passed: violations == 0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExperimentOutput {
    /// Fully resolved parameters, defaults included.
    pub parameters: serde_json::Value,
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub series: Vec<Series>,
}

impl ExperimentOutput {
    pub fn new(parameters: impl Serialize) -> Result<Self> {
        Ok(Self { parameters: serde_json::to_value(parameters)?, ..Default::default() })
    }

    pub fn value(&mut self, name: &str, v: f64) {
        self.values.insert(name.into(), v);
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    passed: bool,
    values: &'a BTreeMap<String, f64>,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    status: &'a str,
    exit_code: i32,
    code_version: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    parameters: &'a serde_json::Value,
    checks: &'a [Check],
    outputs: Vec<String>,
    timings: Timings,
}

#[derive(Serialize)]
struct Timings {
    wall_seconds: f64,
}

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_series(dir: &Path, s: &Series) -> Result<String> {
    let file = format!("series-{}.csv", s.name);
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(s.columns.iter().map(|(c, u)| if u.is_empty() { c.clone() } else { format!("{c} [{u}]") }))?;
    for row in &s.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Output(e.to_string()))?;
    write_atomic(&dir.join(&file), &bytes)?;
    Ok(file)
}

pub struct RunRecord<'a> {
    pub name: &'a str,
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub wall_seconds: f64,
}

/// Writes every output of a finished run into `dir`; the manifest goes last.
pub fn write_run(dir: &Path, rec: &RunRecord, out: &ExperimentOutput) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut files = vec![];
    for s in &out.series {
        files.push(write_series(dir, s)?);
    }
    let summary = Summary { experiment: rec.name, passed: out.passed(), values: &out.values, checks: &out.checks };
    write_atomic(&dir.join("summary.json"), &to_json(&summary)?)?;
    files.push("summary.json".into());
    let exit_code = if out.passed() { 0 } else { 1 };
    let manifest = Manifest {
        experiment: rec.name,
        status: if out.passed() { "pass" } else { "fail" },
        exit_code,
        code_version: env!("CARGO_PKG_VERSION"),
        seed: rec.seed,
        config: rec.config,
        parameters: &out.parameters,
        checks: &out.checks,
        outputs: files,
        timings: Timings { wall_seconds: rec.wall_seconds },
    };
    let path = dir.join("manifest.json");
    write_atomic(&path, &to_json(&manifest)?)?;
    Ok(path)
}

fn to_json(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}
