use thiserror::Error;

/// Errors raised by model construction, certification and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coercivity violated in segment {segment} at z = {position}: {detail}")]
    Coercivity {
        segment: usize,
        position: f64,
        detail: String,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("flux continuity violated at interface: residual {residual:e} exceeds {threshold:e}")]
    ContinuityViolation { residual: f64, threshold: f64 },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("reduced dimension {dim} exceeds the eigenvalue cap {cap}; use a coarser grid")]
    Resource { dim: usize, cap: usize },

    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
