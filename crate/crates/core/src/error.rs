use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("generator assembly failed: {0}")]
    Assembly(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("control {value} outside the admissible cone {cone}")]
    OutsideCone { value: f64, cone: String },

    #[error("non-finite state in path {path} at step {step}")]
    NonFinite { path: usize, step: usize },

    #[error("coercivity violated: {0}")]
    Coercivity(String),

    #[error("search space too large: {size} candidates (limit {limit})")]
    SearchSpaceTooLarge { size: f64, limit: f64 },

    #[error("nonlinear cost: {0}")]
    Nonlinear(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            got,
            context,
        })
    }
}
