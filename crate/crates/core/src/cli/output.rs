//! CSV outputs and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Column types of a CSV schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Col {
    /// Finite or non-finite float (`inf`, `NaN` allowed).
    Float,
    Int,
    Bool,
    Text,
}

/// One CSV table held in memory until it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub types: Vec<Col>,
    pub rows: Vec<Vec<String>>,
}

/// A cell value; floats print in shortest round-trip form so reruns are
/// byte-identical and values parse back exactly.
pub enum Cell {
    F(f64),
    I(i64),
    U(u64),
    B(bool),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:?}"),
            Cell::I(v) => v.to_string(),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(v) => v.clone(),
        }
    }
}

#[macro_export]
#[doc(hidden)]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::cli::output::Cell::from($x)),*] };
}

impl Table {
    pub fn new(name: &str, columns: &[(&'static str, Col)]) -> Self {
        Table {
            name: name.to_string(),
            header: columns.iter().map(|c| c.0).collect(),
            types: columns.iter().map(|c| c.1).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        assert_eq!(
            cells.len(),
            self.header.len(),
            "row width for {}",
            self.name
        );
        self.rows.push(cells.iter().map(Cell::render).collect());
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Re-read a written file and check it against this table's schema.
    pub fn validate(&self, path: &Path) -> Result<usize> {
        let bad = |m: String| Error::Io(format!("{}: {m}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header: Vec<String> = r
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(String::from)
            .collect();
        if header != self.header {
            return Err(bad(format!(
                "header {header:?} does not match schema {:?}",
                self.header
            )));
        }
        let mut n = 0;
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != self.types.len() {
                return Err(bad(format!(
                    "row {i} has {} fields, schema has {}",
                    rec.len(),
                    self.types.len()
                )));
            }
            for (field, (ty, col)) in rec.iter().zip(self.types.iter().zip(&self.header)) {
                let ok = match ty {
                    Col::Float => field.parse::<f64>().is_ok(),
                    Col::Int => field.parse::<i64>().is_ok() || field.parse::<u64>().is_ok(),
                    Col::Bool => field == "true" || field == "false",
                    Col::Text => true,
                };
                if !ok {
                    return Err(bad(format!(
                        "row {i}, column {col}: `{field}` is not {ty:?}"
                    )));
                }
            }
            n += 1;
        }
        if n != self.rows.len() {
            return Err(bad(format!(
                "{n} rows read back, {} written",
                self.rows.len()
            )));
        }
        Ok(n)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    /// SHA-256 of the resolved configuration (after command-line overrides).
    pub config_sha256: String,
    pub code_version: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Write and validate every table, then the manifest.
pub fn write_outputs(
    dir: &Path,
    tables: &[Table],
    mut manifest: RunManifest,
) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    for t in tables {
        let path = t.write(dir)?;
        let rows = t.validate(&path)?;
        manifest.outputs.push(OutputRecord {
            file: t.file_name(),
            rows,
            sha256: sha256_hex(&fs::read(&path)?),
        });
    }
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}
