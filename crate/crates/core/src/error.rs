use thiserror::Error;

/// Errors raised by the numeric kernels, the distributions and the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("non-finite value {value} encountered at x = {at}")]
    NonFinite { at: f64, value: f64 },

    #[error("moment of order {order} diverges")]
    Divergence { order: f64 },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("value {value} outside the time-transform range [0, {max}]")]
    Range { value: f64, max: f64 },

    #[error("no convergence after {iterations} iterations: {what}")]
    Convergence { what: String, iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
