use thiserror::Error;

/// Errors raised by the cone, operator, pencil and solver routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The linear map `P` is singular (`rho == n`).
    #[error("singular cone map: rho = {rho} equals the dimension")]
    SingularMap { rho: f64 },

    #[error("inadmissible parameter: {0}")]
    InadmissibleParameter(String),

    /// The point is not in the open cone; `index` is the first violated
    /// elementary symmetric degree (1-based).
    #[error("point outside the cone: sigma_{index} = {value:e} is not positive")]
    Domain { index: usize, value: f64 },

    #[error("metric is not positive definite")]
    Metric,

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("no admissible initial guess: {0}")]
    Initialization(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e}): {reason}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
        history: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
