//! Plot-ready tables from a finished run, and replay of its records.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::commands::{run_subcommand, Table};
use crate::persist::{read_manifest, read_record, RecordBody, RecordFile};
use crate::{CliError, Subcommand};

#[derive(Serialize)]
struct MuRow {
    record: usize,
    state: usize,
    iteration: usize,
    mu: f64,
}

#[derive(Serialize)]
struct EntropyRow {
    record: usize,
    entropy: f64,
    bound: f64,
    certified: bool,
}

#[derive(Serialize)]
struct LogDRow {
    record: usize,
    x: f64,
    q: f64,
    log_d_total: f64,
    scaling_constant: Option<f64>,
}

#[derive(Serialize)]
struct MpsRow {
    record: usize,
    k: u64,
    error_sq: f64,
    bound: f64,
    pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayLine {
    pub record: String,
    pub identical: bool,
}

#[derive(Debug)]
pub struct Report {
    pub run: PathBuf,
    pub records: usize,
    pub tables: Vec<Table>,
    pub replay: Vec<ReplayLine>,
}

impl Report {
    pub fn replay_ok(&self) -> bool {
        self.replay.iter().all(|r| r.identical)
    }
}

pub fn load_records(run: &Path) -> Result<Vec<(String, RecordFile)>, CliError> {
    let manifest = read_manifest(run)?;
    manifest.records.iter().map(|name| Ok((name.clone(), read_record(&run.join(name))?))).collect()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

/// Builds every table the records support; a run of `plan` points yields a
/// `logd_vs_x` table, `amplify` yields `mu_vs_iteration`, and so on.
pub fn build_tables(records: &[(String, RecordFile)]) -> Result<Vec<Table>, CliError> {
    let mut mu = Vec::new();
    let mut entropy = Vec::new();
    let mut logd = Vec::new();
    let mut mps = Vec::new();
    for (i, (_, rec)) in records.iter().enumerate() {
        let b = &rec.body;
        match b.subcommand {
            Subcommand::Amplify => {
                for s in b.results["states"].as_array().into_iter().flatten() {
                    let state = s["state"].as_u64().unwrap_or(0) as usize;
                    for (iteration, m) in s["mus"].as_array().into_iter().flatten().enumerate() {
                        mu.push(MuRow { record: i, state, iteration, mu: f(m) });
                    }
                }
            }
            Subcommand::EntropyBound if b.metrics.contains_key("entropy") => entropy.push(EntropyRow {
                record: i,
                entropy: b.metrics["entropy"],
                bound: b.metrics["bound"],
                certified: b.metrics.get("certified") == Some(&1.0),
            }),
            Subcommand::Plan if b.metrics.contains_key("X") => logd.push(LogDRow {
                record: i,
                x: b.metrics["X"],
                q: b.metrics["q"],
                log_d_total: b.metrics["log_d_total"],
                scaling_constant: b.metrics.get("scaling_constant").copied(),
            }),
            Subcommand::MpsCheck => {
                for r in b.results["mps"]["rows"].as_array().into_iter().flatten() {
                    mps.push(MpsRow {
                        record: i,
                        k: r["k"].as_u64().unwrap_or(0),
                        error_sq: f(&r["error_sq"]),
                        bound: f(&r["bound_2nD_over_k"]),
                        pass: r["pass"].as_bool().unwrap_or(false),
                    });
                }
            }
            _ => {}
        }
    }
    let mut tables = Vec::new();
    if !mu.is_empty() {
        tables.push(Table::from_rows("mu_vs_iteration", &mu)?);
    }
    if !entropy.is_empty() {
        tables.push(Table::from_rows("entropy_vs_bound", &entropy)?);
    }
    if !logd.is_empty() {
        tables.push(Table::from_rows("logd_vs_x", &logd)?);
    }
    if !mps.is_empty() {
        tables.push(Table::from_rows("mps_error_vs_k", &mps)?);
    }
    Ok(tables)
}

/// Re-runs each record from its echoed config and compares bodies byte for
/// byte. Timestamps are not part of the body.
pub fn replay(records: &[(String, RecordFile)]) -> Vec<ReplayLine> {
    records
        .par_iter()
        .map(|(name, rec)| {
            let b = &rec.body;
            let fresh = RecordBody::new(b.subcommand, &b.config, &run_subcommand(b.subcommand, &b.config));
            ReplayLine { record: name.clone(), identical: fresh.canonical() == b.canonical() }
        })
        .collect()
}

pub fn report(run: &Path, do_replay: bool) -> Result<Report, CliError> {
    let records = load_records(run)?;
    let tables = build_tables(&records)?;
    let replay = if do_replay { replay(&records) } else { Vec::new() };
    Ok(Report { run: run.to_path_buf(), records: records.len(), tables, replay })
}

/// Writes the report tables into `<run>/report/`.
pub fn write_report(r: &Report) -> Result<PathBuf, CliError> {
    let dir = r.run.join("report");
    fs::create_dir_all(&dir)?;
    for t in &r.tables {
        fs::write(dir.join(format!("{}.csv", t.name)), &t.csv)?;
    }
    if !r.replay.is_empty() {
        fs::write(dir.join("replay.json"), serde_json::to_string_pretty(&r.replay)?)?;
    }
    Ok(dir)
}
