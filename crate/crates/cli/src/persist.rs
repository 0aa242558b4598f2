//! Run directories: `<root>/<run-id>/{manifest.json, records/, tables/}`.
//!
//! Records are written once and never rewritten. A record file holds the
//! deterministic `body` and, separately, wall-clock `timestamps`.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands::{Check, Outcome, Table};
use crate::config::ExperimentConfig;
use crate::{CliError, Subcommand};

pub const OUT_ENV: &str = "AGSPLAB_OUT";
pub const DEFAULT_OUT: &str = "outputs";

/// `--out`, then the config's `out`, then `AGSPLAB_OUT`, then `outputs`.
pub fn output_root(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.out {
        return p.clone();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordBody {
    pub subcommand: Subcommand,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub results: Value,
    pub checks: Vec<CheckEcho>,
    pub metrics: std::collections::BTreeMap<String, f64>,
    pub pass: bool,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// [`Check`] in serializable-and-parsable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEcho {
    pub name: String,
    pub pass: bool,
    pub kind: String,
}

impl From<&Check> for CheckEcho {
    fn from(c: &Check) -> Self {
        let kind = serde_json::to_value(c.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        Self { name: c.name.clone(), pass: c.pass, kind }
    }
}

impl RecordBody {
    /// Body for a finished computation; `outcome` is `Err` for a point that
    /// stopped with an error.
    pub fn new(sub: Subcommand, cfg: &ExperimentConfig, outcome: &Result<Outcome, CliError>) -> Self {
        let (results, checks, metrics, pass, exit_code, error) = match outcome {
            Ok(o) => (
                o.results.clone(),
                o.checks.iter().map(CheckEcho::from).collect(),
                o.metrics.clone(),
                o.passed(),
                o.exit_code(),
                None,
            ),
            Err(e) => (Value::Null, Vec::new(), Default::default(), false, e.exit_code(), Some(e.to_string())),
        };
        // Round-trip through JSON so in-memory and parsed bodies compare equal.
        let results = serde_json::from_str(&serde_json::to_string(&results).expect("json")).expect("json");
        Self {
            subcommand: sub,
            config_hash: cfg.content_hash(),
            config: cfg.clone(),
            results,
            checks,
            metrics,
            pass,
            exit_code,
            error,
        }
    }

    /// The canonical bytes compared for reproducibility.
    pub fn canonical(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordFile {
    pub body: RecordBody,
    pub timestamps: Timestamps,
}

pub fn read_record(path: &Path) -> Result<RecordFile, CliError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub subcommand: Subcommand,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub created_unix_ms: u128,
    pub version: String,
    pub records: Vec<String>,
    pub tables: Vec<String>,
    pub points: usize,
    pub passed: usize,
    pub pass_rate: f64,
    pub exit_code: i32,
}

#[derive(Debug)]
pub struct RunDir {
    pub path: PathBuf,
    pub run_id: String,
    records: Vec<String>,
    tables: Vec<String>,
    created: u128,
}

fn write_new(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = OpenOptions::new().write(true).create_new(true).open(path)?;
    f.write_all(bytes)?;
    Ok(())
}

impl RunDir {
    pub fn create(root: &Path, sub: Subcommand, hash: &str) -> Result<Self, CliError> {
        let created = now_ms();
        let base = format!("{sub}-{}-{created}", &hash[..12]);
        let mut run_id = base.clone();
        let mut n = 1;
        while root.join(&run_id).exists() {
            run_id = format!("{base}-{n}");
            n += 1;
        }
        let path = root.join(&run_id);
        fs::create_dir_all(path.join("records"))?;
        fs::create_dir_all(path.join("tables"))?;
        Ok(Self { path, run_id, records: Vec::new(), tables: Vec::new(), created })
    }

    pub fn write_record(&mut self, body: RecordBody, started: u128) -> Result<PathBuf, CliError> {
        let name = format!("{:04}.json", self.records.len());
        let file = RecordFile { body, timestamps: Timestamps { started_unix_ms: started, finished_unix_ms: now_ms() } };
        let path = self.path.join("records").join(&name);
        write_new(&path, serde_json::to_string_pretty(&file)?.as_bytes())?;
        self.records.push(format!("records/{name}"));
        Ok(path)
    }

    pub fn write_table(&mut self, table: &Table, prefix: Option<usize>) -> Result<PathBuf, CliError> {
        let name = match prefix {
            Some(i) => format!("{:04}_{}.csv", i, table.name),
            None => format!("{}.csv", table.name),
        };
        let path = self.path.join("tables").join(&name);
        write_new(&path, table.csv.as_bytes())?;
        self.tables.push(format!("tables/{name}"));
        Ok(path)
    }

    pub fn write_manifest(
        &self,
        sub: Subcommand,
        cfg: &ExperimentConfig,
        passed: usize,
        points: usize,
        exit_code: i32,
    ) -> Result<PathBuf, CliError> {
        let m = Manifest {
            run_id: self.run_id.clone(),
            subcommand: sub,
            config_hash: cfg.content_hash(),
            config: cfg.clone(),
            created_unix_ms: self.created,
            version: env!("CARGO_PKG_VERSION").to_string(),
            records: self.records.clone(),
            tables: self.tables.clone(),
            points,
            passed,
            pass_rate: if points == 0 { 0.0 } else { passed as f64 / points as f64 },
            exit_code,
        };
        let path = self.path.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&m)?)?;
        Ok(path)
    }
}

pub fn read_manifest(run: &Path) -> Result<Manifest, CliError> {
    Ok(serde_json::from_str(&fs::read_to_string(run.join("manifest.json"))?)?)
}

/// Most recently created run under `root`.
pub fn latest_run(root: &Path) -> Result<PathBuf, CliError> {
    let mut best: Option<(u128, PathBuf)> = None;
    for entry in fs::read_dir(root)? {
        let p = entry?.path();
        if let Ok(m) = read_manifest(&p) {
            if best.as_ref().is_none_or(|(t, _)| m.created_unix_ms >= *t) {
                best = Some((m.created_unix_ms, p));
            }
        }
    }
    best.map(|(_, p)| p).ok_or_else(|| CliError::Config(format!("no runs under {}", root.display())))
}

/// Persists a single-point run and returns its directory and exit code.
pub fn persist_single(
    root: &Path,
    sub: Subcommand,
    cfg: &ExperimentConfig,
    outcome: &Result<Outcome, CliError>,
    started: u128,
) -> Result<(RunDir, i32), CliError> {
    let mut run = RunDir::create(root, sub, &cfg.content_hash())?;
    let body = RecordBody::new(sub, cfg, outcome);
    let code = body.exit_code;
    let pass = body.pass;
    run.write_record(body, started)?;
    if let Ok(o) = outcome {
        for t in &o.tables {
            run.write_table(t, None)?;
        }
    }
    run.write_manifest(sub, cfg, usize::from(pass), 1, code)?;
    Ok((run, code))
}
