//! Scenario files, the runner and report output behind the `curvdecay`
//! binary.

pub mod config;
pub mod emit;
pub mod runner;

use std::path::PathBuf;

pub use config::{ConfigFile, ScenarioConfig};
pub use curvdecay::{Status, VerificationReport};
pub use emit::{emit_report, Format};
pub use runner::{exit_code, run_scenarios, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Runtime(String),
}

/// Exit code for usage errors and for I/O failures.
pub const EXIT_USAGE: u8 = 1;
