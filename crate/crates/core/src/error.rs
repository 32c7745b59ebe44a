use thiserror::Error;

/// Errors raised by the numerical operators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The Leray denominator `<eta, xi - z>` (or a section denominator)
    /// fell below the pole-proximity threshold.
    #[error("pole proximity at parameter {param:?} for z = {z}: |denominator| = {magnitude:e}")]
    PoleProximity {
        param: Vec<f64>,
        z: String,
        magnitude: f64,
    },

    #[error("non-finite sample at node {node:?} (parameter {param:?})")]
    PoisonedSample { node: Vec<usize>, param: Vec<f64> },

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("inconsistent cocycle: equivariance residual {residual:e} on patches ({i}, {j})")]
    InconsistentCocycle { i: usize, j: usize, residual: f64 },

    #[error("invalid cocycle: {0}")]
    InvalidCocycle(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
