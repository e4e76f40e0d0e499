use thiserror::Error;

use crate::naive::NaiveEstimate;

pub type Result<T> = std::result::Result<T, EivError>;

#[derive(Debug, Clone, Error)]
pub enum EivError {
    /// A distribution or model parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An MGF argument lies outside the open interval on which the MGF is finite.
    #[error("{what} = {t} is outside the MGF domain ({lo}, {hi}) of {law}")]
    Domain {
        what: &'static str,
        t: f64,
        lo: f64,
        hi: f64,
        law: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("exponent {exponent} exceeds the overflow guard {bound}")]
    Overflow { exponent: f64, bound: f64 },

    #[error("every count is zero; the naive estimator does not exist")]
    AllZeroCounts,

    #[error(
        "Newton iteration did not converge after {} iterations (score norm {:e})",
        .0.iterations,
        .0.score_norm
    )]
    NonConvergence(Box<NaiveEstimate>),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("degenerate moment estimate: {0}")]
    DegenerateMoment(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{failed} of {total} replications failed (more than half)")]
    TooManyFailures { failed: usize, total: usize },
}
