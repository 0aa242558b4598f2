//! Experiment configuration: a versioned JSON document.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use agsplab::agsp::PairSelection;
use agsplab::hamiltonian::ModelSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SWEEP_LIMIT: usize = 10_000;

/// A bond dimension, or the full `d^{⌊n/2⌋}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BondSpec {
    Value(usize),
    Full(FullTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FullTag {
    Full,
}

impl std::str::FromStr for BondSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "full" {
            return Ok(BondSpec::Full(FullTag::Full));
        }
        s.parse().map(BondSpec::Value).map_err(|_| format!("expected an integer or 'full', got {s}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyInputs {
    pub mu: f64,
    pub d: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanInputs {
    /// Gap; ignored when `x` is set.
    pub epsilon: Option<f64>,
    /// `X = log₂ d / ε`; sets `ε = log₂ d / X`.
    #[serde(rename = "X", alias = "x")]
    pub x: Option<f64>,
    pub d: usize,
    /// Boundary length `I` for a 2D plan.
    pub boundary: Option<u64>,
}

impl Default for PlanInputs {
    fn default() -> Self {
        Self { epsilon: None, x: None, d: 2, boundary: None }
    }
}

impl PlanInputs {
    pub fn epsilon(&self) -> Option<f64> {
        match self.x {
            Some(x) => Some((self.d as f64).log2() / x),
            None => self.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountInputs {
    pub j_max: u64,
    pub brute_ell: usize,
    pub brute_budget: u32,
    pub symbolic_j: u32,
    pub symbolic_ell: u32,
}

impl Default for CountInputs {
    fn default() -> Self {
        Self { j_max: 1 << 20, brute_ell: 6, brute_budget: 24, symbolic_j: 6, symbolic_ell: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub subcommand: String,
    /// Dotted paths into the config, each with its list of values. Points
    /// are the cartesian product in key order, last key fastest.
    #[serde(default)]
    pub axes: BTreeMap<String, Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

fn default_schema() -> u32 {
    0
}
fn default_m() -> usize {
    3
}
fn default_q() -> u32 {
    2
}
fn default_probes() -> usize {
    32
}
fn default_initial() -> usize {
    100
}
fn default_iters() -> usize {
    20
}
fn default_selection() -> PairSelection {
    PairSelection::Oracle
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    /// Particles left of the cut; the middle when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<usize>,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_q")]
    pub q: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_initial")]
    pub initial_states: usize,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "default_selection")]
    pub selection: PairSelection,
    /// Product-state overlap for bounds; the top Schmidt value when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ells: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<BondSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cheb_m: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarse_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyInputs>,
    #[serde(default)]
    pub plan: PlanInputs,
    #[serde(default)]
    pub count: CountInputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Output root. Not echoed into records.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_value(serde_json::json!({ "schema": SCHEMA_VERSION })).expect("defaults parse")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check_schema()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn check_schema(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported or missing \"schema\": expected {SCHEMA_VERSION}, got {}",
                self.schema
            )));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<&ModelSpec, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::Config("this subcommand needs a \"model\"".into()))
    }

    /// Canonical JSON echo of the config.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Git-style content hash: SHA-256 of `blob <len>\0<canonical json>`.
    pub fn content_hash(&self) -> String {
        let body = self.canonical_json();
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Seed for derived random streams: the user seed mixed with the hash.
    pub fn stream_seed(&self) -> u64 {
        let hash = self.content_hash();
        let prefix = u64::from_str_radix(&hash[..16], 16).expect("hex hash");
        self.seed ^ prefix
    }
}

/// Sets a dotted path inside a JSON object, creating objects on the way.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("empty segment in axis path {path:?}")));
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("axis path {path:?} crosses a non-object")))?;
        if i + 1 == parts.len() {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        cur = obj.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_field_is_required() {
        assert!(ExperimentConfig::from_json("{}").is_err());
        assert!(ExperimentConfig::from_json(r#"{"schema": 2}"#).is_err());
        let cfg = ExperimentConfig::from_json(r#"{"schema": 1}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"schema": 1, "nope": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"schema": 1, "model": {"kind": "aklt", "n": 4, "x": 1}}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_root() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { out: Some("/tmp/x".into()), ..a.clone() };
        assert_eq!(a.content_hash(), b.content_hash());
        let c = ExperimentConfig { seed: 1, ..a.clone() };
        assert_ne!(a.content_hash(), c.content_hash());
        assert_eq!(a.content_hash().len(), 64);
    }

    #[test]
    fn bond_specs_parse() {
        let cfg = ExperimentConfig::from_json(r#"{"schema": 1, "k_list": [1, 2, "full"]}"#).unwrap();
        assert_eq!(
            cfg.k_list.unwrap(),
            vec![BondSpec::Value(1), BondSpec::Value(2), BondSpec::Full(FullTag::Full)]
        );
        assert_eq!("full".parse::<BondSpec>().unwrap(), BondSpec::Full(FullTag::Full));
    }

    #[test]
    fn dotted_paths() {
        let mut v = serde_json::json!({"schema": 1});
        set_path(&mut v, "plan.X", serde_json::json!(4.0)).unwrap();
        set_path(&mut v, "seed", serde_json::json!(9)).unwrap();
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(cfg.plan.x, Some(4.0));
        assert_eq!(cfg.seed, 9);
        assert!((cfg.plan.epsilon().unwrap() - 0.25).abs() < 1e-15);
    }
}
