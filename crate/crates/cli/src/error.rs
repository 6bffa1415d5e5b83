use std::path::PathBuf;

use dla_core::DlaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] DlaError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for algorithm-level failures, 2 for usage and I/O problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                DlaError::Io { .. }
                | DlaError::EmptyFile { .. }
                | DlaError::Parse { .. }
                | DlaError::Shape { .. }
                | DlaError::InvalidConfig { .. } => 2,
                _ => 1,
            },
        }
    }
}
