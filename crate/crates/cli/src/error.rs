use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] seedstab::Error),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("training failed for every run: {0}")]
    Training(String),
    #[error("incomplete evaluation: {0}")]
    IncompleteEval(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) | CliError::File { .. } => 2,
            CliError::Training(_) => 3,
            CliError::IncompleteEval(_) => 4,
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::File {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
