use std::path::PathBuf;
use thiserror::Error;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BenchError {
    /// The config document is malformed or violates an invariant.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] cvarmix_core::Error),
}

impl BenchError {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        BenchError::Config { path: path.into(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }

    /// 1 for validation problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config { .. } | BenchError::Invalid(_) => 1,
            BenchError::Core(cvarmix_core::Error::Contract(_)) => 1,
            _ => 2,
        }
    }
}
