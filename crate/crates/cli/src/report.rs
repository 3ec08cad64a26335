//! Result tables, assertions and their on-disk form.
//!
//! Every CSV starts with a `# schema_version=N` comment line followed by the
//! column header. Floats are written in shortest round-trip form, so equal
//! results give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = format!("# schema_version={SCHEMA_VERSION}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row)?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Formats a float for CSV: plain decimals in a readable range, scientific
/// notation outside it. Both forms round-trip exactly.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

/// Tables and assertions produced by one experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Outcome {
    pub experiment: String,
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
    /// Measurements that are reported but not asserted.
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self { experiment: experiment.into(), ..Default::default() }
    }

    pub fn check(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { label: label.into(), passed, detail: detail.into() });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    /// Writes each table as `<prefix><table>.csv` and returns the paths.
    pub fn write_tables(&self, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
        self.tables
            .iter()
            .map(|t| {
                let path = dir.join(format!("{prefix}{}.csv", t.name));
                t.write_csv(&path)?;
                Ok(path)
            })
            .collect()
    }
}
