//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by simulator, fitting and mitigation operations.
#[derive(Error, Debug)]
pub enum Error {
    /// An argument was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix or register dimensions do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A nonlinear fit failed to converge or was degenerate.
    #[error("fit error: {0}")]
    Fit(String),

    /// A learned model violated the noise-model structure (e.g. negative
    /// radicand when splitting fidelity products).
    #[error("model violation: {0}")]
    ModelViolation(String),

    /// Internal consistency check failed (e.g. populations not normalized).
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// Configuration file could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
