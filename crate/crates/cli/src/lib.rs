//! Configuration, pipeline and checks behind the `zerosurf` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod pipeline;
pub mod report;

use thiserror::Error;

pub use config::RunConfig;
pub use pipeline::{run, RunOptions, RunOutcome};
pub use report::{RunReport, Status};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config_error: {0}")]
    Config(String),
    #[error("io_error: {0}")]
    Io(String),
    #[error("internal_error: {0}")]
    Core(#[from] zerosurf::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_GATE: i32 = 2;
pub const EXIT_SOLVE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_SOLVE,
        }
    }

    /// Single-line `status=... cause=...` form for stderr.
    pub fn status_line(&self) -> String {
        let (status, msg) = match self {
            CliError::Config(m) => ("config_error", m.clone()),
            CliError::Io(m) => ("io_error", m.clone()),
            CliError::Core(e) => ("internal_error", e.to_string()),
        };
        format!("status={status} cause={}", msg.replace(['\n', '\r'], " "))
    }
}
