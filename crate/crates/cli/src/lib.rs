//! Experiment runner for `agsplab`: JSON configs in, append-only records and
//! CSV tables out.
//!
//! Exit codes: `0` when every check passes, `2` for configuration or model
//! validation problems, `3` when a numerical bound fails.

pub mod commands;
pub mod config;
pub mod persist;
pub mod report;
pub mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use commands::{run_subcommand, Check, CheckKind, Outcome, Table};
pub use config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BOUND: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] agsplab::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("replay mismatch: {0}")]
    Replay(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Library(agsplab::Error::CertificateViolation { .. }) => EXIT_BOUND,
            _ => EXIT_CONFIG,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("csv: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Model,
    Spectrum,
    DlCheck,
    ChebCheck,
    AgspCertify,
    Amplify,
    EntropyBound,
    TailCheck,
    MpsCheck,
    CountCheck,
    Plan,
    Sweep,
    Report,
}

impl Subcommand {
    pub const ALL: [Subcommand; 13] = [
        Subcommand::Model,
        Subcommand::Spectrum,
        Subcommand::DlCheck,
        Subcommand::ChebCheck,
        Subcommand::AgspCertify,
        Subcommand::Amplify,
        Subcommand::EntropyBound,
        Subcommand::TailCheck,
        Subcommand::MpsCheck,
        Subcommand::CountCheck,
        Subcommand::Plan,
        Subcommand::Sweep,
        Subcommand::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Subcommand::Model => "model",
            Subcommand::Spectrum => "spectrum",
            Subcommand::DlCheck => "dl-check",
            Subcommand::ChebCheck => "cheb-check",
            Subcommand::AgspCertify => "agsp-certify",
            Subcommand::Amplify => "amplify",
            Subcommand::EntropyBound => "entropy-bound",
            Subcommand::TailCheck => "tail-check",
            Subcommand::MpsCheck => "mps-check",
            Subcommand::CountCheck => "count-check",
            Subcommand::Plan => "plan",
            Subcommand::Sweep => "sweep",
            Subcommand::Report => "report",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subcommand {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown subcommand {s:?}")))
    }
}
