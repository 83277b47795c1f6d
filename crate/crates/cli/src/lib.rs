//! Experiment runner behind the `entrolab` binary: JSON configs, report and
//! series output, and the invariant suites of `entrolab verify`.

pub mod config;
pub mod output;
pub mod run;
pub mod suites;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] entrolab_core::Error),
    #[error("output error: {0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 2 for configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
