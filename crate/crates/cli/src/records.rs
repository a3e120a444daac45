//! Estimate records: one CSV row per (window, method).

use std::io::{Read, Write};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::{data, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub window_start: f64,
    pub window_duration: f64,
    pub method: String,
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
    pub contrast: f64,
    /// Global bound at exit; empty for methods without one.
    pub upper_bound: Option<f64>,
    pub iterations: u64,
    pub runtime_s: f64,
    pub certified: bool,
}

/// Writes records with a header. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_records(w: impl Write, records: &[RunRecord]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r).context("writing records").map_err(data)?;
    }
    out.flush().context("writing records").map_err(data)
}

pub fn read_records(r: impl Read) -> CliResult<Vec<RunRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("record {}", i + 1)).map_err(data))
        .collect()
}
