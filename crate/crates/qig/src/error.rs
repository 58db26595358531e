//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),

    #[error("not a unit square-root state: tr(xi^2) = {0}")]
    InvalidSqrtNorm(f64),

    #[error("zero-norm state vector")]
    ZeroNorm,

    #[error("eigensolver failed to converge for {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("observable is not traceless: |tr A| = {0:.3e}")]
    NotTraceless(f64),

    #[error("derivative order must be in {{1, 2, 3}}, got {0}")]
    InvalidOrder(u32),

    #[error("moment order must be in 2..=4, got {0}")]
    InvalidMomentOrder(u32),

    #[error("sample count {0} below minimum {1}")]
    TooFewSamples(usize, usize),

    #[error("finite-difference step {0:.3e} underflows the parameter scale")]
    StepUnderflow(f64),

    #[error("rejected {rejected} of {total} samples ({fraction:.4}), above the 1% budget")]
    RejectionRate {
        rejected: usize,
        total: usize,
        fraction: f64,
    },

    #[error("invalid qubit density: R = {0} exceeds 1/2")]
    InvalidBlochRadius(f64),

    #[error("parameter vector has length {0}, family expects {1}")]
    ParamDimMismatch(usize, usize),

    #[error("zero velocity: tr(xi' xi') = {0:.3e}, no locally unbiased estimator exists")]
    ZeroVelocity(f64),

    #[error("estimator is not locally unbiased: tr[(T xi + xi T) xi'] = {0}")]
    NotLocallyUnbiased(f64),

    #[error("inequality violated (implementation bug): {0}")]
    InequalityViolated(String),

    #[error("cross-check failed: {0}")]
    CrossCheckFailed(String),

    #[error("mesh resolution must be at least 8, got {0}")]
    ResolutionTooSmall(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by invalid input data rather than an
    /// internal numerical failure. The CLI maps these to exit code 2.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::NotSquare { .. }
                | Error::DimensionMismatch(..)
                | Error::DimensionTooSmall(..)
                | Error::InvalidTrace(..)
                | Error::NotPositiveSemidefinite(..)
                | Error::InvalidSqrtNorm(..)
                | Error::ZeroNorm
                | Error::NotTraceless(..)
                | Error::InvalidOrder(..)
                | Error::InvalidMomentOrder(..)
                | Error::TooFewSamples(..)
                | Error::InvalidBlochRadius(..)
                | Error::ParamDimMismatch(..)
                | Error::ResolutionTooSmall(..)
                | Error::InvalidArgument(..)
                | Error::Json(..)
        )
    }
}
