use std::path::Path;

use thiserror::Error;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Config = 2,
    Training = 3,
    DetectionIo = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::Config,
            CliError::Training(_) => ExitCode::Training,
            CliError::Io(_) => ExitCode::DetectionIo,
        }
    }

    pub fn config(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{context}: {e}"))
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}
