use std::path::PathBuf;

use thiserror::Error;

/// Everything a command can fail with, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] kscale_core::Error),
}

impl CliError {
    /// 2 usage, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        use kscale_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse { .. } | CliError::Io { .. } | CliError::Data(_) => 3,
            CliError::Core(E::InvalidInput(_)) => 3,
            CliError::Core(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
