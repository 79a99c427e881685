use thiserror::Error;

use crate::design::DesignSolution;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// The design solver hit its iteration cap. The best design found so far
    /// is carried along so callers can still use it.
    #[error(
        "design solver stopped after {iterations} iterations with relative gap {relative_gap:.3e}"
    )]
    NotConverged {
        best: Box<DesignSolution>,
        iterations: usize,
        relative_gap: f64,
    },

    #[error("rounding needs at least {floor:.3} samples in dimension {dim}, got {requested}")]
    BelowRoundingFloor {
        dim: usize,
        floor: f64,
        requested: u64,
    },

    #[error("rounding guarantee violated: achieved {achieved:.6e} > bound {bound:.6e} (N = {total}, d = {dim})")]
    RoundingGuarantee {
        achieved: f64,
        bound: f64,
        total: u64,
        dim: usize,
    },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("epsilon {eps} unreachable at ambient dimension {dim}")]
    EpsilonUnreachable { eps: f64, dim: usize },

    #[error("budget too small: {0}")]
    BudgetTooSmall(String),

    #[error("environment exhausted after {0} pulls")]
    Exhausted(u64),

    #[error("instance has no known intrinsic dimension")]
    MissingIntrinsicDim,
}

pub type Result<T> = std::result::Result<T, Error>;
