//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MscError {
    /// A scalar parameter is outside its admissible domain (a < 0, p outside
    /// (0,1), sigma < 0, and similar).
    #[error("parameter domain violation: {0}")]
    ParameterDomain(String),

    /// The requested operation needs a convex total cost and the pair
    /// (lambda, a) sits outside the admissible region, or convexity could
    /// not be certified.
    #[error("convexity violation: {0}")]
    ConvexityViolation(String),

    /// The operation is not defined for the requested penalty kind.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A recursive difference system whose poles are not strictly inside the
    /// unit circle.
    #[error("unstable system: {0}")]
    Unstable(String),

    /// Input data fails a structural requirement (asymmetric Gram matrix,
    /// non-monic denominator, empty support, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative routine ran out of iterations without meeting its
    /// tolerance. The payload carries the best iterate found.
    #[error("convergence failure: {message}")]
    ConvergenceFailure { message: String, best: Vec<f64> },

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed numeric text data (CSV fields and similar).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, MscError>;
