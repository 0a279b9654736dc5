//! Library side of the `qram` command: configuration, experiment pipelines
//! and verification suites.

pub mod config;
pub mod experiments;
pub mod verify;

pub use config::RunConfig;
pub use experiments::{Experiment, ExperimentOptions, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] qram_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    /// 0 success, 1 runtime or I/O, 2 usage or config.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Core(qram_core::Error::Argument(_)) => 2,
            CliError::Core(_) | CliError::Io(_) | CliError::Verify(_) => 1,
        }
    }
}
