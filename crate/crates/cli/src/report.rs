//! Report records and their deterministic serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::SCHEMA_VERSION;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Equals,
}

/// A named tolerance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            comparison: Comparison::AtMost,
            limit,
            passed: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            comparison: Comparison::AtLeast,
            limit,
            passed: value >= limit,
        }
    }

    pub fn equals(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Check {
            name: name.into(),
            value,
            comparison: Comparison::Equals,
            limit: expected,
            passed: value == expected,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::equals(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

/// A CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Shortest round-trip representation; `nan`, `inf`, `-inf` spelled out.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Outcome of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub id: String,
    pub experiment: String,
    /// Which representation formula or estimate the experiment exercises.
    pub formula: String,
    pub seed: u64,
    pub inputs: Value,
    pub outputs: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(skip)]
    pub table: Table,
    /// `(N, error)` pairs written as a two-column data file.
    #[serde(skip)]
    pub series: Option<Vec<(usize, f64)>>,
}

impl Report {
    pub fn new(id: &str, experiment: &str, formula: &str, seed: u64, inputs: Value) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            id: id.to_string(),
            experiment: experiment.to_string(),
            formula: formula.to_string(),
            seed,
            inputs,
            outputs: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            error: None,
            passed: true,
            wall_time_s: None,
            table: Table::default(),
            series: None,
        }
    }

    pub fn output(&mut self, key: &str, v: impl Serialize) {
        self.outputs
            .insert(key.to_string(), serde_json::to_value(v).expect("serializable output"));
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Sets `passed` from the checks and the error slot.
    pub fn finish(mut self) -> Self {
        self.passed = self.error.is_none() && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, ReportError> {
    fs::write(&path, contents).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `<id>.json` and/or `<id>.csv`, plus `<id>.dat` for convergence
/// series. Returns the paths written.
pub fn emit_report(report: &Report, dir: &Path, format: Format) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    if matches!(format, Format::Json | Format::Both) {
        written.push(write(dir.join(format!("{}.json", report.id)), &report.to_json())?);
    }
    if matches!(format, Format::Csv | Format::Both) {
        written.push(write(dir.join(format!("{}.csv", report.id)), &report.table.to_csv())?);
        if let Some(series) = &report.series {
            let mut dat = String::from("# N error\n");
            for (n, e) in series {
                let _ = writeln!(dat, "{n} {}", format_float(*e));
            }
            written.push(write(dir.join(format!("{}.dat", report.id)), &dat)?);
        }
    }
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub id: String,
    pub experiment: String,
    pub passed: bool,
    pub failed_checks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: u32,
    pub seed: u64,
    pub passed: bool,
    pub experiments: Vec<SummaryEntry>,
}

impl Summary {
    pub fn from_reports(seed: u64, reports: &[Report]) -> Self {
        Summary {
            schema: SCHEMA_VERSION,
            seed,
            passed: reports.iter().all(|r| r.passed),
            experiments: reports
                .iter()
                .map(|r| SummaryEntry {
                    id: r.id.clone(),
                    experiment: r.experiment.clone(),
                    passed: r.passed,
                    failed_checks: r.failed_checks().iter().map(|c| c.name.clone()).collect(),
                    error: r.error.clone(),
                })
                .collect(),
        }
    }

    pub fn emit(&self, dir: &Path) -> Result<PathBuf, ReportError> {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        write(dir.join("summary.json"), &s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_has_header_only() {
        let mut r = Report::new("e", "reconstruct", "leray", 0, Value::Null);
        r.table = Table::new(&["z_re", "z_im", "value_re", "value_im", "oracle_re", "oracle_im", "abs_err"]);
        assert_eq!(r.table.to_csv(), "z_re,z_im,value_re,value_im,oracle_re,oracle_im,abs_err\n");
        let r = r.finish();
        assert!(r.passed);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.id, "e");
    }

    #[test]
    fn cells() {
        assert_eq!(Cell::from(0.5).render(), "5e-1");
        assert_eq!(Cell::from(f64::NAN).render(), "nan");
        assert_eq!(Cell::from("a,b").render(), "\"a,b\"");
        assert_eq!(Cell::from(None::<f64>).render(), "");
        let v: f64 = Cell::from(0.1 + 0.2).render().parse().unwrap();
        assert_eq!(v, 0.1 + 0.2);
    }

    #[test]
    fn checks() {
        assert!(Check::at_most("a", 1.0, 1.0).passed);
        assert!(!Check::at_least("b", 0.5, 1.0).passed);
        assert!(Check::flag("c", true).passed);
    }
}
