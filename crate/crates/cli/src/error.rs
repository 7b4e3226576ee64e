use std::path::{Path, PathBuf};

use grasscomp_core::Error as CoreError;

/// Failures of a command, each tied to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Precondition(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("replay differs from the recorded run: {0}")]
    ReplayMismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Precondition(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
            CliError::ReplayMismatch(_) => 1,
        }
    }

    pub fn io(path: &Path, message: impl ToString) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        CliError::Precondition(message.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Degenerate { .. }
            | CoreError::DegenerateAt { .. }
            | CoreError::RankDeficient { .. }
            | CoreError::NotUnique { .. }
            | CoreError::AmbiguousCritical { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
