//! Comparison tables over run reports.

use std::io::Write;

use serde::Serialize;

use crate::discrete::RunReport;
use crate::trajectory::fmt_f64;

pub const SUMMARY_COLUMNS: [&str; 5] = [
    "optimizer",
    "best_f",
    "epoch_of_best",
    "final_grad_norm",
    "iters_to_threshold",
];

/// Written in place of an iteration count when the threshold was never met.
pub const UNREACHED: &str = "unreached";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub optimizer: String,
    pub best_f: f64,
    pub epoch_of_best: u64,
    pub final_grad_norm: f64,
    pub iters_to_threshold: Option<u64>,
}

impl From<&RunReport> for SummaryRow {
    fn from(r: &RunReport) -> Self {
        SummaryRow {
            optimizer: r.optimizer.clone(),
            best_f: r.best_f,
            epoch_of_best: r.epoch_of_best,
            final_grad_norm: r.final_grad_norm,
            iters_to_threshold: r.iters_to_threshold,
        }
    }
}

/// Ascending `best_f`, ties kept in input order. Failed runs and NaN
/// values sort last.
pub fn sort_reports(reports: &[RunReport]) -> Vec<&RunReport> {
    let mut sorted: Vec<&RunReport> = reports.iter().collect();
    sorted.sort_by(|a, b| {
        let key = |r: &RunReport| r.error.is_some() || r.best_f.is_nan();
        key(a).cmp(&key(b)).then(a.best_f.total_cmp(&b.best_f))
    });
    sorted
}

pub fn summary_rows(reports: &[RunReport]) -> Vec<SummaryRow> {
    sort_reports(reports).into_iter().map(SummaryRow::from).collect()
}

/// Writes the sorted table as CSV. An empty list gives the header alone.
pub fn emit_summary<W: Write>(reports: &[RunReport], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for row in summary_rows(reports) {
        let reached = row
            .iters_to_threshold
            .map_or_else(|| UNREACHED.to_string(), |k| k.to_string());
        w.write_record([
            row.optimizer,
            fmt_f64(row.best_f),
            row.epoch_of_best.to_string(),
            fmt_f64(row.final_grad_norm),
            reached,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The sorted table as a JSON array; unreached thresholds are `null`.
pub fn emit_summary_json(reports: &[RunReport]) -> String {
    serde_json::to_string_pretty(&summary_rows(reports)).expect("summary rows serialize")
}
