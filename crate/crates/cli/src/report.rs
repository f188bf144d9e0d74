//! Report documents, comparison tables and their files.

use std::fs;
use std::path::{Path, PathBuf};

use scatlip::bounds::{BoundReport, McConfig};
use scatlip::signal::Grid;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    /// File path as given, or `builtin:<name>`.
    pub network: String,
    pub methods: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McConfig>,
    pub grid: Grid,
    pub tool_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Serialize)]
pub struct ReportDoc<'a> {
    #[serde(flatten)]
    pub report: &'a BoundReport,
    pub manifest: &'a Manifest,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub quantity: String,
    pub computed: f64,
    pub published: Option<f64>,
    pub tolerance: String,
    pub status: &'static str,
}

fn row(quantity: impl Into<String>, computed: f64, published: Option<f64>, tolerance: String, pass: bool) -> Row {
    Row {
        quantity: quantity.into(),
        computed,
        published,
        tolerance,
        status: if pass { "PASS" } else { "FAIL" },
    }
}

pub fn within_abs(quantity: &str, computed: f64, want: f64, tol: f64) -> Row {
    row(quantity, computed, Some(want), format!("±{tol}"), (computed - want).abs() <= tol)
}

pub fn within_rel(quantity: &str, computed: f64, want: f64, tol: f64) -> Row {
    let pass = (computed - want).abs() <= tol * want.abs();
    row(quantity, computed, Some(want), format!("±{}%", tol * 100.0), pass)
}

/// `lo < x ≤ hi` when `open_low`, else `lo ≤ x ≤ hi`.
pub fn within_band(quantity: &str, computed: f64, reference: Option<f64>, lo: f64, hi: f64, open_low: bool) -> Row {
    let low_ok = if open_low { computed > lo } else { computed >= lo };
    let bracket = if open_low { '(' } else { '[' };
    row(quantity, computed, reference, format!("{bracket}{lo}, {hi}]"), low_ok && computed <= hi)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| CliError::Write { path: path.into(), source })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| CliError::Write { path: path.into(), source })
}

pub fn out_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.into(), source })?;
    Ok(dir.to_path_buf())
}

pub fn print_rows(rows: &[Row]) {
    println!("{:<28} {:>14} {:>12} {:>16}  status", "quantity", "computed", "published", "tolerance");
    for r in rows {
        let published = r.published.map_or("-".to_string(), |p| format!("{p}"));
        println!("{:<28} {:>14.6} {:>12} {:>16}  {}", r.quantity, r.computed, published, r.tolerance, r.status);
    }
}
