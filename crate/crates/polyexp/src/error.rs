//! Error type shared across the library.

use thiserror::Error;

/// Coarse classification used by callers that map failures to process exit
/// codes: bad inputs versus numerical breakdown on valid inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The input violates a documented precondition.
    Validation,
    /// The computation failed numerically on otherwise valid input.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mixture: {0}")]
    InvalidGmm(String),

    #[error("invalid polynomial exponential density: {0}")]
    InvalidPed(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("moment order {requested} exceeds supported cap {cap}")]
    OrderCap { requested: usize, cap: usize },

    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("Hankel coefficient vector must have odd length 2d+1, got {0}")]
    EvenHankelLength(usize),

    #[error("moment matrix not positive definite")]
    NotPositiveDefinite,

    #[error("score-matching system singular")]
    ScoreMatchingSingular,

    #[error("non-integrable fit: leading coefficient theta_{order} = {value} is not negative; try a different order")]
    NonIntegrableFit { order: usize, value: f64 },

    #[error("divergent partition function: {0}")]
    DivergentPartition(String),

    #[error("quadrature did not converge: achieved tolerance {achieved:e}, requested {requested:e} (best estimate {estimate})")]
    QuadratureNonConvergence {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("maximum-entropy iteration did not converge after {iterations} iterations (residual {residual:e}); last theta: {last_theta:?}")]
    IlsmNonConvergence {
        iterations: usize,
        residual: f64,
        last_theta: Vec<f64>,
    },

    #[error("proposal tails too light: target/proposal density ratio is unbounded or overflows")]
    ProposalTailsTooLight,

    #[error("envelope too loose: acceptance rate {rate:e} after {proposals} proposals")]
    EnvelopeTooLoose { rate: f64, proposals: u64 },

    #[error("envelope violated: target exceeds c * proposal at x = {x}")]
    EnvelopeViolated { x: f64 },

    #[error("order selection failed for every candidate: {0}")]
    SelectionExhausted(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidGmm(_)
            | Error::InvalidPed(_)
            | Error::EmptyDataset
            | Error::OrderCap { .. }
            | Error::OrderMismatch { .. }
            | Error::EvenHankelLength(_)
            | Error::InvalidParameter(_) => ErrorKind::Validation,
            Error::NotPositiveDefinite
            | Error::ScoreMatchingSingular
            | Error::NonIntegrableFit { .. }
            | Error::DivergentPartition(_)
            | Error::QuadratureNonConvergence { .. }
            | Error::IlsmNonConvergence { .. }
            | Error::ProposalTailsTooLight
            | Error::EnvelopeTooLoose { .. }
            | Error::EnvelopeViolated { .. }
            | Error::SelectionExhausted(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
