//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any part of the optimizer stack.
#[derive(Debug, Error)]
pub enum PrimoError {
    /// A value violated a domain contract (bounds, dimensions, invariants).
    #[error("domain error: {0}")]
    Domain(String),
    /// An API was driven out of order (e.g. observing a trial that was never suggested).
    #[error("protocol error: {0}")]
    Protocol(String),
    /// A file or text document did not match its schema.
    #[error("parse error: {0}")]
    Parse(String),
    /// A numeric routine failed beyond recovery (e.g. factorization after max jitter).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A benchmark evaluation failed.
    #[error("benchmark error: {0}")]
    Benchmark(String),
    /// Required inputs (cells, files, priors) are absent.
    #[error("missing data: {0}")]
    Missing(String),
    /// A documented but deliberately unimplemented option was requested.
    #[error("unimplemented: {0}")]
    Unimplemented(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PrimoError>;

impl PrimoError {
    pub fn domain(msg: impl Into<String>) -> Self {
        PrimoError::Domain(msg.into())
    }

    pub fn protocol(msg: impl Into<String>) -> Self {
        PrimoError::Protocol(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        PrimoError::Parse(msg.into())
    }
}
