//! Scenario runner behind the `dirint` binary: loads JSON scenarios, runs the
//! requested checks and sweeps, and writes one report row per check and
//! exponent tuple.

pub mod audit;
pub mod report;
pub mod run;
pub mod scenario;

use thiserror::Error;

/// Input problems. Every variant maps to exit code 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid scenario: {0}")]
    Schema(String),

    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: dirint::Error,
    },

    #[error("cannot write report: {0}")]
    Csv(#[from] csv::Error),
}
