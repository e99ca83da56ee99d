use thiserror::Error;

/// Errors produced by the trust model, solvers, and data ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called in a way its contract forbids.
    #[error("misuse: {0}")]
    Misuse(String),

    /// Dataset file violates the CSV schema.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Parameter/config file rejected during validation.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical procedure failed to produce a usable result.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn misuse(msg: impl Into<String>) -> Self {
        Error::Misuse(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
