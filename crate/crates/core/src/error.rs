use thiserror::Error;

/// Errors raised by the analytic solvers, the LP layer and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("profile has {profile} blocks but {weights} weights were given")]
    LengthMismatch { profile: usize, weights: usize },

    #[error("g3 has no sign change for q_hat in [{lo:e}, {hi:e}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("LP solve ended with status {0:?}")]
    Lp(crate::lp::LpStatus),

    #[error("simplex basis became numerically singular")]
    SingularBasis,

    #[error("trial failed: {0}")]
    Trial(String),

    #[error("{failed} of {total} trials failed at n = {n}")]
    TooManyFailures {
        n: usize,
        failed: usize,
        total: usize,
    },

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
