//! Trace tables: one CSV row per scored iterate.

use std::io::{Read, Write};

use cfres_core::resilience::{ResilienceTrace, TraceRecord};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TRACE_HEADER: [&str; 7] = ["iter", "t_ms", "psi", "alpha_ada", "alpha_rec", "alpha_overall", "is_best"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Row {
    iter: usize,
    t_ms: f64,
    psi: f64,
    alpha_ada: f64,
    alpha_rec: f64,
    alpha_overall: f64,
    is_best: u8,
}

/// The per-iterate part of a trace; the run-level fields live in the
/// manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub records: Vec<TraceRecord>,
    pub best_index: Option<usize>,
}

impl From<&ResilienceTrace> for TraceTable {
    fn from(t: &ResilienceTrace) -> Self {
        Self { records: t.records.clone(), best_index: t.best_index }
    }
}

pub fn write_trace<W: Write>(table: &TraceTable, out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRACE_HEADER).map_err(|e| CliError::Io(e.to_string()))?;
    for (i, r) in table.records.iter().enumerate() {
        let row = Row {
            iter: r.iter,
            t_ms: r.t_ms,
            psi: r.psi,
            alpha_ada: r.alpha_ada,
            alpha_rec: r.alpha_rec,
            alpha_overall: r.alpha_overall,
            is_best: u8::from(table.best_index == Some(i)),
        };
        w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<TraceTable, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| CliError::Trace(e.to_string()))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(CliError::Trace(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut table = TraceTable { records: Vec::new(), best_index: None };
    for (i, row) in r.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| CliError::Trace(e.to_string()))?;
        match row.is_best {
            0 => {}
            1 if table.best_index.is_none() => table.best_index = Some(i),
            1 => return Err(CliError::Trace(format!("second best row at line {}", i + 2))),
            v => return Err(CliError::Trace(format!("is_best must be 0 or 1, got {v}"))),
        }
        table.records.push(TraceRecord {
            iter: row.iter,
            t_ms: row.t_ms,
            psi: row.psi,
            alpha_ada: row.alpha_ada,
            alpha_rec: row.alpha_rec,
            alpha_overall: row.alpha_overall,
        });
    }
    Ok(table)
}
