//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by the deconvolution operations.
#[derive(Debug, Clone, Error)]
pub enum DeconvError {
    /// A leading coefficient that must be inverted is zero.
    #[error("singular leading coefficient at index {index}")]
    SingularLeading {
        /// Index `ℓ` whose value at the origin vanishes.
        index: i64,
    },

    /// Brute-force composition enumeration refused (too expensive).
    #[error("enumeration cap exceeded: requested target {requested}, cap {cap}")]
    EnumerationCap { requested: i64, cap: i64 },

    /// Truncation index above the documented numerically reliable range.
    #[error("truncation index {m} exceeds the supported maximum {max}")]
    TruncationIndex { m: usize, max: usize },

    /// A monotone-mode partial sum shows growing oscillation.
    #[error(
        "divergent partial sums after {terms} terms (oscillation {oscillation:.3e}, last partial sum {last_partial:.6e})"
    )]
    Divergence {
        /// Number of accumulated terms at abort.
        terms: usize,
        /// Running oscillation measure at abort.
        oscillation: f64,
        /// Partial sum at abort.
        last_partial: f64,
    },

    /// A probe-point constraint of the continuous-noise recovery failed.
    #[error("probe constraint violated at grid index {index}: {detail}")]
    ProbeConstraint { index: usize, detail: String },

    /// Operation needs at least one observation.
    #[error("empty sample")]
    EmptySample,

    /// Generic invalid argument.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl DeconvError {
    /// Helper for parameter validation failure messages.
    pub fn invalid(msg: impl Into<String>) -> Self {
        DeconvError::InvalidParameter(msg.into())
    }
}
