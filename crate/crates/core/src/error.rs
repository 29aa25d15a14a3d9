//! Error type shared by the library modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("truncation height {needed:.1} exceeds the configured maximum {max:.1}")]
    TruncationTooHigh { needed: f64, max: f64 },
    #[error("discretization error {bound:e} cannot meet tolerance {tol:e}; reduce the step")]
    StepTooCoarse { bound: f64, tol: f64 },
    #[error("working precision too low: roundoff {roundoff:e} exceeds tolerance {tol:e}")]
    InsufficientPrecision { roundoff: f64, tol: f64 },
    #[error("tail model slope {0} is not negative")]
    NonDecayingTail(f64),
    #[error("weight accuracy {accuracy:e} is worse than 1e-3 of the largest weight {largest:e}")]
    InaccurateWeights { accuracy: f64, largest: f64 },
    #[error("relation is numerically zero")]
    DegenerateRelation,
    #[error("normalization infeasible: every keep weight is numerically zero")]
    InfeasibleNormalization,
    #[error("integer rounding residual {0:e} exceeds tolerance")]
    RoundingResidual(f64),
    #[error("horizon mismatch: relation has M = {relation}, assignment covers {assignment}")]
    HorizonMismatch { relation: usize, assignment: usize },
    #[error("unknown curve label {0:?}")]
    UnknownCurve(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
