use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("estimate undefined for an arm with no pulls")]
    UndefinedEstimate,

    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),

    #[error("arm index {index} out of range for {n_arms} arms")]
    InvalidIndex { index: usize, n_arms: usize },

    #[error("budget {budget} is smaller than the number of arms {n_arms}")]
    InsufficientBudget { budget: usize, n_arms: usize },

    #[error("invalid run config: {0}")]
    InvalidConfig(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
