use std::path::PathBuf;

use twobody_qsl::QslError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("claim not met: {0}")]
    ClaimFailed(String),
    #[error(transparent)]
    Core(#[from] QslError),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 usage or config, 2 verification failure, 3 internal.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::ClaimFailed(_) => 2,
            CliError::Core(e) => match e {
                QslError::ZeroBandwidth { .. } => 3,
                _ => 1,
            },
            CliError::Io { .. } | CliError::Internal(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
