//! Command-line experiments on top of `kakeya-core`: configuration layering,
//! CSV/JSON reports, regression fixtures and multi-threaded hit-set builds.

pub mod cli;
pub mod config;
pub mod fixture;
pub mod output;
pub mod parallel;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] kakeya_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("fixture mismatch: {0}")]
    FixtureMismatch(String),
}

impl CliError {
    /// 1 usage or parse, 2 budget or depth, 3 fixture mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(kakeya_core::Error::BudgetExceeded { .. })
            | CliError::Core(kakeya_core::Error::InsufficientDepth { .. }) => 2,
            CliError::FixtureMismatch(_) => 3,
            _ => 1,
        }
    }
}
