//! Rendering of command results as JSON, CSV or aligned text, and atomic
//! delivery to stdout or a file.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use fano_core::bounds::{BoundInputs, BoundReport, ReportRow, CSV_COLUMNS};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).context("serializing output")?;
    s.push('\n');
    Ok(s)
}

/// CSV with an explicit header; `Option` fields become empty cells.
pub fn csv<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().context("flushing CSV")?;
    Ok(String::from_utf8(bytes)?)
}

pub fn report_csv(rows: &[ReportRow]) -> Result<String> {
    csv(&CSV_COLUMNS, rows)
}

/// A CSV row for a report, with inputs when they are known.
pub fn report_row(id: &str, inputs: Option<&BoundInputs>, report: &BoundReport) -> ReportRow {
    ReportRow {
        instance_id: id.to_string(),
        mode: report.mode,
        alpha: inputs.map_or_else(|| "kl".to_string(), |i| i.order.label()),
        p_min: inputs.map(|i| i.p_min),
        p_max: inputs.map(|i| i.p_max),
        divergence: inputs.map(|i| i.divergence),
        bound_value: report.bound_value,
        observed: report.observed,
        slack: report.slack,
        feasible_sup: report.feasible_sup,
    }
}

/// Two-column text table.
#[derive(Default)]
pub struct Table {
    rows: Vec<(String, String)>,
}

impl Table {
    pub fn row(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.rows.push((key.into(), value.to_string()));
        self
    }

    pub fn opt(&mut self, key: impl Into<String>, value: Option<f64>) -> &mut Self {
        self.row(key, value.map_or_else(|| "-".to_string(), |v| v.to_string()))
    }

    pub fn report(&mut self, report: &BoundReport) -> &mut Self {
        self.row("mode", format!("{:?}", report.mode).to_lowercase())
            .row("bound_value", report.bound_value)
            .opt("observed", report.observed)
            .opt("slack", report.slack)
            .opt("feasible_sup", report.feasible_sup)
            .row("holds", report.holds());
        if !report.notes.is_empty() {
            self.row("notes", &report.notes);
        }
        self
    }

    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        self.rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
    }
}

/// Writes `text` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("--out: cannot create a file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("--out: cannot write {}", path.display()))?;
    Ok(())
}
