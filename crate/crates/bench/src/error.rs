use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error("cannot read config {path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed config {path}: {source}")]
    ConfigJson {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] rucb_core::Error),
}

impl BenchError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Spec(_) | BenchError::Config { .. } | BenchError::ConfigJson { .. } => 2,
            BenchError::Output { .. } => 3,
            BenchError::Core(
                rucb_core::Error::InvalidConfig(_)
                | rucb_core::Error::InvalidSpec(_)
                | rucb_core::Error::InsufficientBudget { .. },
            ) => 2,
            BenchError::Core(rucb_core::Error::Io(_) | rucb_core::Error::Parse { .. }) => 3,
            BenchError::Core(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
