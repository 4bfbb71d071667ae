use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {mode} out of range for {modes}-mode system")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("beam splitter needs two distinct modes, got {0} twice")]
    SameMode(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("matrix is singular or ill-conditioned (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("covariance matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("covariance violates the uncertainty relation (min eigenvalue {min_eigenvalue:e})")]
    Unphysical { min_eigenvalue: f64 },

    #[error("probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { value: f64 },

    #[error("measurement mask selects no mode")]
    EmptyMask,

    #[error("p_e = {value} outside the attainable range [{min}, {max}]")]
    Unattainable { value: f64, min: f64, max: f64 },

    #[error("curve is not monotone near V = {at}")]
    NotMonotone { at: f64 },

    #[error("ill-conditioned series fit (condition estimate {condition:e})")]
    IllConditionedFit { condition: f64 },

    #[error("fit range spans {decades:.2} decades, need at least 2")]
    NarrowFitRange { decades: f64 },

    #[error("truncation tail {tail:e} exceeds ceiling {ceiling:e}")]
    TruncationTail { tail: f64, ceiling: f64 },

    #[error("phase quadrature did not converge up to order {order}")]
    QuadratureNotConverged { order: usize },

    #[error("undefined: {0}")]
    Undefined(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
