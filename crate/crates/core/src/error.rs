use thiserror::Error;

/// Errors raised by the solvers and constructors in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid exponent p = {0}: expected a finite value in (1, inf)")]
    InvalidExponent(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("f(0) = 0: the optimal polynomial approximant is identically zero")]
    ZeroAtOrigin,

    #[error("no sign change of {what} on [{lo}, {hi}] (values {f_lo:e}, {f_hi:e})")]
    BracketFailure {
        what: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// `best` holds the last iterate so callers can inspect or reuse it.
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("{z0} is not a root of the approximant (|q(z0)| = {value:e})")]
    NotARoot { z0: f64, value: f64 },

    #[error("exponent p = {0} is too close to 2 for this construction")]
    UnsupportedExponent(f64),

    #[error("search cap of {0} exceeded")]
    CapExceeded(usize),

    #[error("value {value} outside the admissible range: {reason}")]
    OutOfRange { value: f64, reason: &'static str },

    #[error("roots coalesce at t = {0}")]
    Degenerate(f64),

    #[error("singularity of {0} at x = {1}")]
    Singularity(&'static str, f64),

    #[error("Psi has a pole at x = 0")]
    PoleAtZero,

    #[error("y = {y} is outside the range of the {branch} branch")]
    BranchMiss { y: f64, branch: &'static str },

    #[error("converged to an invalid branch: {0}")]
    InvalidBranch(String),

    #[error("unsupported precision of {0} bits")]
    Precision(u32),
}

pub type Result<T> = std::result::Result<T, Error>;
