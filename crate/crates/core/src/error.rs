use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MmpsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("system is not valid: {0}")]
    InvalidSystem(String),

    #[error("inconsistent linear system (residual {residual:.3e})")]
    Inconsistent { residual: f64 },

    #[error("singular matrix: pivot {pivot:.3e} in column {column}")]
    Singular { column: usize, pivot: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, MmpsError>;
