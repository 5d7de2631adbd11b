use thiserror::Error;

/// Errors raised by the geometric kernels and the verification runner.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("evaluation produced a non-finite value: {0}")]
    Evaluation(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("point outside domain: {0}")]
    Domain(String),
    #[error("vectors are based at different points")]
    BaseMismatch,
    #[error("direction is not unit length (norm {0})")]
    NotUnit(f64),
    #[error("vector is not tangent to the null hypersurface (residual {0:e})")]
    NotTangent(f64),
    #[error("degenerate construction: {0}")]
    Degenerate(String),
    #[error("coincident principal curvatures {0} and {1}")]
    Coincident(f64, f64),
    #[error("parameter s = {s} outside the chart range (-{eps}, {eps})")]
    OutOfRange { s: f64, eps: f64 },
    #[error("chart differential is rank deficient (smallest singular value {0:e}); focal point")]
    FocalPoint(f64),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
