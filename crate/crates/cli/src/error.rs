use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] bn_ergodic::Error),

    #[error("failed to encode JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    ContractFailed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 2 usage or domain, 3 I/O, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        use bn_ergodic::Error as E;
        match self {
            CliError::Usage(_) | CliError::Json(_) => 2,
            CliError::Io { .. } => 3,
            CliError::ContractFailed(_) => 4,
            CliError::Core(e) => match e {
                E::Io(_) => 3,
                E::NonFinite { .. } | E::NonPositive { .. } => 4,
                _ => 2,
            },
        }
    }
}
