//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or configuration values.
    #[error("configuration error: {0}")]
    Config(String),

    /// Inconsistent or malformed input data.
    #[error("data error: {0}")]
    Data(String),

    /// Numerical failure during iteration or a linear solve.
    #[error("numerical error: {0}")]
    Numeric(String),

    /// A statistical estimate could not be formed from the sample.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Too many Monte-Carlo runs failed to produce a summary.
    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file contents (CSV or JSON).
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }
}
