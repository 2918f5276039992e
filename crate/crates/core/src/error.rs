use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmlError {
    #[error("parameter vector has length {got}, model basis has {expected} functions")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state {value} is outside the model domain (lower bound {lower})")]
    OutsideDomain { value: f64, lower: f64 },

    #[error("simulated path left the state domain at step {step} after {attempts} redraws")]
    DomainExit { step: usize, attempts: usize },

    #[error("simulated path diverged at step {step}")]
    PathDiverged { step: usize },

    #[error("non-finite basis value at interval {k}, path {s}, step {m} (state {state})")]
    NonFiniteBasis { k: usize, s: usize, m: usize, state: f64 },

    #[error("normal equations are numerically singular (reciprocal condition {rcond:e}); basis [{basis}] is linearly dependent or the data are insufficient")]
    Singular { rcond: f64, basis: String },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("volatility function is not positive at x = {x} (value {value})")]
    NonPositiveVolatility { x: f64, value: f64 },

    #[error("Lamperti map is not invertible at y = {0}")]
    NotInvertible(f64),

    #[error("quadrature failed on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },

    #[error("density estimate failed: {0}")]
    EstimationFailure(String),

    #[error("optimizer did not converge: {0}")]
    NoConvergence(String),

    #[error("exponent overflow in Radon-Nikodym weight (integral {integral}, path min {path_min}, path max {path_max})")]
    WeightOverflow { integral: f64, path_min: f64, path_max: f64 },

    #[error("inconsistent diagnostic: functional has zero L2 norm but LHS is {lhs}")]
    Inconsistent { lhs: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, EmlError>;
