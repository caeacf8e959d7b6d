//! Result bundles: CSV tables, `outcomes.json` and `meta.json`.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::RunError;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "TCSIM_OUTPUT_DIR";

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            // 17 significant digits
            Cell::Real(x) => format!("{x:.16e}"),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Int(i) => i as f64,
            Cell::Real(x) => x,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem; the table is written to `<name>.csv`.
    pub name: String,
    /// Column headers including units, e.g. `t [1/g]`.
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self {
            name: name.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, header: &str) -> Option<Vec<f64>> {
        let i = self.headers.iter().position(|h| h == header)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Everything an experiment produces before it is written out.
#[derive(Clone, Debug, Default)]
pub struct RunResult {
    pub tables: Vec<Table>,
    /// Scalar diagnostics for `meta.json`.
    pub summary: Value,
    /// Per-run records for `outcomes.json`.
    pub outcomes: Option<Value>,
}

impl RunResult {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    kind: &'a str,
    seed: u64,
    version: &'a str,
    git_revision: String,
    wall_time_seconds: f64,
    config: &'a ExperimentConfig,
    summary: &'a Value,
}

pub fn git_revision() -> String {
    Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Output directory: the environment override, else the configured one,
/// else `tcsim-output/<kind>`.
pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        return PathBuf::from(dir);
    }
    config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("tcsim-output").join(config.kind.name()))
}

/// Writes the bundle and returns the written file paths.
pub fn write_bundle(
    dir: &Path,
    config: &ExperimentConfig,
    result: &RunResult,
    wall_time_seconds: f64,
) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for table in &result.tables {
        let path = dir.join(format!("{}.csv", table.name));
        table.write(&path)?;
        written.push(path);
    }
    if let Some(outcomes) = &result.outcomes {
        let path = dir.join("outcomes.json");
        std::fs::write(
            &path,
            serde_json::to_string_pretty(outcomes).map_err(|e| RunError::Output(e.to_string()))?,
        )?;
        written.push(path);
    }
    let meta = Meta {
        kind: config.kind.name(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION"),
        git_revision: git_revision(),
        wall_time_seconds,
        config,
        summary: &result.summary,
    };
    let path = dir.join("meta.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&meta).map_err(|e| RunError::Output(e.to_string()))?,
    )?;
    written.push(path);
    Ok(written)
}
