use thiserror::Error;

use crate::method_spec::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid method: {}", join_violations(.0))]
    InvalidMethod(Vec<Violation>),

    #[error("invalid function class: need 0 < m <= L with both finite, got m = {m}, L = {big_l}")]
    InvalidFunctionClass { m: f64, big_l: f64 },

    #[error("unknown preset `{0}` (expected gradient-descent, heavy-ball, nesterov or triple-momentum)")]
    UnknownPreset(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid quadratic instance: {0}")]
    InvalidQuadratic(String),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(&'static str),

    #[error("{0} lies in the forbidden set of the conformal map")]
    OutsideDomain(num_complex::Complex64),

    #[error("target radius must lie in (0, 1), got {0}")]
    InvalidRadius(f64),

    #[error("need at least {needed} usable distances for a rate estimate, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
