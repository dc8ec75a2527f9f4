use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is empty")]
    Empty,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not lower triangular")]
    NotLowerTriangular,
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
}

/// Failure while evaluating a log density at a point.
///
/// Samplers treat any of these as a log density of −∞.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("forward solver failed at t = {time}: {reason}")]
    SolverFailure { time: f64, reason: &'static str },
    #[error("point has dimension {found}, target expects {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Failure while constructing a target.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TargetError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("data shape: {0}")]
    DataShape(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("could not find an initial state with finite log density after {attempts} attempts")]
    InitialState { attempts: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Target(#[from] TargetError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("series of length {len} is too short (need more than {needed})")]
    TooShort { len: usize, needed: usize },
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}
