//! CSV rows: `rep,checkpoint,set_type,mode,covered,beta,width_metric,extra_json`.

use std::io::Write;

use serde_json::Value;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "rep",
    "checkpoint",
    "set_type",
    "mode",
    "covered",
    "beta",
    "width_metric",
    "extra_json",
];

/// One output row. Per-replication rows carry `covered` as 0/1; summary rows
/// (`rep = "summary"`) carry the fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub rep: String,
    pub checkpoint: String,
    pub set_type: String,
    pub mode: String,
    pub covered: f64,
    pub beta: f64,
    pub width_metric: f64,
    pub extra: Value,
}

/// Binomial margin `3 sqrt(p (1 - p) / reps)`.
pub fn binomial_margin(p: f64, reps: usize) -> f64 {
    3.0 * (p * (1.0 - p) / reps as f64).sqrt()
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.rep.as_str(),
            r.checkpoint.as_str(),
            r.set_type.as_str(),
            r.mode.as_str(),
            &r.covered.to_string(),
            &r.beta.to_string(),
            &r.width_metric.to_string(),
            &r.extra.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn csv_string(rows: &[Row]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
