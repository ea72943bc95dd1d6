use thiserror::Error;

/// Errors raised anywhere in the reservoir, readout, task and harness code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical divergence at step {step}: non-finite value")]
    Divergence { step: u64 },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient history: index {index} needs at least {needed} preceding entries")]
    InsufficientHistory { index: usize, needed: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot normalize: {0}")]
    Normalization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
