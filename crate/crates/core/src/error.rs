use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("rank {rank} out of range for sample size {n}")]
    RankOutOfRange { rank: usize, n: usize },

    #[error("ranks must satisfy 1 <= r < s <= n (got r = {r}, s = {s}, n = {n})")]
    RankOrder { r: usize, s: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("observation {index} is not positive ({value}); this family requires x > 0")]
    NonPositiveData { index: usize, value: f64 },

    #[error("observation {index} is not finite")]
    NonFiniteData { index: usize },

    #[error("fitted slope {slope} has the wrong sign; data inconsistent with the family")]
    NonPositiveSlope { slope: f64 },

    #[error("covariance matrix is numerically singular ({0}); use diagonal weights instead")]
    SingularCovariance(String),

    #[error("maximum likelihood did not converge after {iterations} iterations (relative score norm {score_norm:e})")]
    NoConvergence { iterations: usize, score_norm: f64 },

    #[error("Hessian of the log-likelihood is not negative definite at the reported optimum")]
    NotNegativeDefinite,

    #[error("{failed} of {total} bootstrap replications failed to fit (limit 20%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{0}")]
    Io(String),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
