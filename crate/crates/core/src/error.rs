use thiserror::Error;

/// Errors produced across the solver kit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is numerically singular (pivot {index})")]
    Singular { index: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("size guard exceeded: {what} has dimension {dim} > {limit}")]
    SizeGuard {
        what: &'static str,
        dim: usize,
        limit: usize,
    },

    #[error("GMRES breakdown at iteration {iteration} with residual ratio {ratio:.3e}")]
    Breakdown { iteration: usize, ratio: f64 },

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("deadline exceeded")]
    Timeout,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
