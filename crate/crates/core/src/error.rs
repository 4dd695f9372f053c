//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum UbsError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("matrix is not symplectic (constraint residuals {first:.3e}, {second:.3e})")]
    NotSymplectic { first: f64, second: f64 },

    #[error("principal matrix logarithm failed: {0}")]
    LogBranchFailure(String),

    #[error("singular generating kernel at mode {mode} (|D| = {magnitude:.3e})")]
    SingularKernel { mode: usize, magnitude: f64 },

    #[error("unsupported pattern: {0}")]
    UnsupportedPattern(String),

    #[error("unsupported derivative order {0} (must be even and <= 8)")]
    UnsupportedOrder(usize),

    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, UbsError>;
