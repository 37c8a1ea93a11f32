//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by schedules, priors, samplers, oracles, and metrics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violated its documented domain (dimension mismatch,
    /// out-of-range value, non-positive scale, asymmetric covariance).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An index or index tuple violated its required ordering or bounds.
    #[error("invalid index: {0}")]
    Index(String),

    /// A computation produced a non-finite or otherwise unusable numeric
    /// result (failed factorization, catastrophic underflow).
    #[error("numeric failure: {0}")]
    Numeric(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
