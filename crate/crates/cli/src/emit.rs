//! Result files.
//!
//! CSV holds one row per (cell, trial) and leaves out wall-clock timing so
//! that repeated runs produce identical bytes; JSON carries everything,
//! timing and cost traces included. Floats are written in Rust's shortest
//! round-trip form in both.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use divsbl_core::metrics::TrialMetrics;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::SweepResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

const FIXED_COLUMNS: [&str; 13] = [
    "trial",
    "seed",
    "snr_db",
    "nmse",
    "corr",
    "block_hit_rate",
    "support_size",
    "success",
    "iterations",
    "converged",
    "beta",
    "exceeds_sparsity_bound",
    "algorithm",
];

pub fn emit(result: &SweepResult, format: Format, path: &Path) -> Result<()> {
    if result.cells.is_empty() {
        return Err(Error::EmptySweep);
    }
    match format {
        Format::Csv => write_csv(result, path),
        Format::Json => write_json(result, path),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    if result.cells.is_empty() {
        return Err(Error::EmptySweep);
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let axes: Vec<&str> = result.cells[0]
        .params
        .iter()
        .map(|(name, _)| name.as_str())
        .collect();
    let header = std::iter::once("cell")
        .chain(axes.iter().copied())
        .chain(FIXED_COLUMNS);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    let algorithm = result.config.algorithm.to_string();
    for (c, cell) in result.cells.iter().enumerate() {
        for r in &cell.records {
            let m = &r.metrics;
            let mut row = vec![c.to_string()];
            row.extend(cell.params.iter().map(|(_, v)| v.to_string()));
            row.extend([
                r.trial.to_string(),
                r.seed.to_string(),
                r.snr_db
                    .map_or_else(|| "none".to_owned(), |v| v.to_string()),
                m.nmse.to_string(),
                m.corr.to_string(),
                m.block_hit_rate.to_string(),
                m.support_size.to_string(),
                m.success.to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
                r.beta.to_string(),
                r.exceeds_sparsity_bound.to_string(),
                algorithm.clone(),
            ]);
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json(result: &SweepResult, path: &Path) -> Result<()> {
    if result.cells.is_empty() {
        return Err(Error::EmptySweep);
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), result).map_err(|e| json_error(path, e))
}

fn json_error(path: &Path, e: serde_json::Error) -> Error {
    if e.is_io() {
        Error::io(path, e.into())
    } else {
        Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

pub fn load_json(path: &Path) -> Result<SweepResult> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| json_error(path, e))
}

/// A parsed CSV result row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub cell: usize,
    pub params: Vec<(String, f64)>,
    pub trial: usize,
    pub seed: u64,
    pub snr_db: Option<f64>,
    pub metrics: TrialMetrics,
    pub iterations: usize,
    pub converged: bool,
    pub beta: f64,
    pub exceeds_sparsity_bound: bool,
    pub algorithm: String,
}

pub fn load_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let axes = header
        .len()
        .checked_sub(1 + FIXED_COLUMNS.len())
        .ok_or_else(|| bad("too few columns".into()))?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        fn num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("cannot parse {s:?}"))
        }
        let parse = || -> std::result::Result<CsvRow, String> {
            let f = |name: &str| {
                field(1 + axes + FIXED_COLUMNS.iter().position(|c| *c == name).unwrap_or(0))
            };
            Ok(CsvRow {
                cell: num(field(0))?,
                params: (0..axes)
                    .map(|a| Ok((header[1 + a].to_owned(), num(field(1 + a))?)))
                    .collect::<std::result::Result<_, String>>()?,
                trial: num(f("trial"))?,
                seed: num(f("seed"))?,
                snr_db: match f("snr_db") {
                    "none" => None,
                    s => Some(num(s)?),
                },
                metrics: TrialMetrics {
                    nmse: num(f("nmse"))?,
                    corr: num(f("corr"))?,
                    block_hit_rate: num(f("block_hit_rate"))?,
                    support_size: num(f("support_size"))?,
                    success: num(f("success"))?,
                },
                iterations: num(f("iterations"))?,
                converged: num(f("converged"))?,
                beta: num(f("beta"))?,
                exceeds_sparsity_bound: num(f("exceeds_sparsity_bound"))?,
                algorithm: f("algorithm").to_owned(),
            })
        };
        rows.push(parse().map_err(bad)?);
    }
    Ok(rows)
}
