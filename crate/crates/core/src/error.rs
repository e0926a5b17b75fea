use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sectional curvature must be non-positive, got K = {0}")]
    PositiveCurvature(f64),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix has a negative eigenvalue {0:e}")]
    NotPositiveSemiDefinite(f64),
    #[error("factorization failed: matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("singular matrix encountered: {0}")]
    Singular(String),
    #[error("root finder did not converge: {0}")]
    NonConvergence(String),
    #[error("frame is not orthonormal (error {0:e})")]
    FrameNotOrthonormal(f64),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("decomposition unavailable: sandwich norm {0} is not below one")]
    DecompositionUnavailable(f64),
    #[error("too many failed samples: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
