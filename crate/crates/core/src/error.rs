//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by scheme generation, certification, and integration.
#[derive(Debug, Error)]
pub enum ImexError {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A matrix input violates a structural requirement (symmetry,
    /// definiteness, dimensions, declared null space).
    #[error("invalid splitting input: {0}")]
    Splitting(String),

    /// An eigenvalue or root iteration failed to converge.
    #[error("eigenvalue iteration failed to converge ({0})")]
    EigenConvergence(String),

    /// The time integration blew up or produced non-finite values.
    #[error("instability detected at step {step}: max-norm {norm:.3e} exceeds limit {limit:.3e}")]
    Instability { step: usize, norm: f64, limit: f64 },

    /// The state left the domain on which the operator is defined
    /// (e.g. non-positive density in the porous-medium solver).
    #[error("state left the admissible domain at step {step}: {reason}")]
    Domain { step: usize, reason: String },

    /// Startup history could not be built.
    #[error("initialization failed: {0}")]
    Initialization(String),

    /// Underlying I/O failure (CSV/JSON output).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, ImexError>;
