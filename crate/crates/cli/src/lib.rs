//! Config-driven experiment runner for the `qwalk` library.
//!
//! A run reads one TOML file, dispatches to a command and writes a CSV or
//! JSON table whose header records the library version, the resolved config
//! and the pass/fail verdict. Nothing time-dependent is written, so equal
//! configs give equal bytes.

use std::path::Path;

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{execute, load_profile, run, Outcome, Verdict};
pub use config::{Command, ExperimentConfig, OutputFormat, Scales};
pub use output::{Cell, Table};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INVALID: u8 = 2;

/// Every variant is an input problem and maps to [`EXIT_INVALID`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Profile(#[from] qwalk::ProfileError),
    #[error(transparent)]
    Analytics(#[from] qwalk::AnalyticsError),
    #[error(transparent)]
    Ensemble(#[from] qwalk::EnsembleError),
    #[error(transparent)]
    Stats(#[from] qwalk::StatsError),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), message: err.to_string() }
    }
}
