//! Batch front-end for the semilinear solver: configuration parsing,
//! experiment execution and machine-readable output.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod efficiency;
pub mod output;
pub mod run;

pub use config::{CliConfig, ProblemKind};
pub use efficiency::{efficiency_sweep, efficiency_table, EfficiencyRow, EpsilonRun};
pub use output::{read_records, write_records, RunSummary};
pub use run::{execute, write_outputs, RunReport};

/// Exit status for a run that met its tolerance.
pub const EXIT_TOLERANCE: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
/// Exit status for a run that exhausted its dof or iteration budget.
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed records csv, line {line}: {message}")]
    Records { line: usize, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("no exact solution: {0}")]
    NoExactSolution(String),

    #[error("solver: {0}")]
    Solver(#[from] semilinear::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => EXIT_SOLVER,
            _ => EXIT_CONFIG,
        }
    }
}
