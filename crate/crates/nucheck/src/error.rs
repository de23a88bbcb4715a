//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("positivity certificate failed: {0}")]
    Certificate(String),

    #[error("empty test-function family")]
    EmptyFamily,

    #[error("rank-deficient input: {0}")]
    RankDeficient(String),

    #[error("vector outside mode span (relative residual {residual:.3e}, tolerance {tol:.3e})")]
    SpanViolation { residual: f64, tol: f64 },

    #[error("Fock dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("power iteration did not converge within {iters} iterations")]
    PowerIteration { iters: usize },

    #[error("series tail not certifiable at cutoff k={k}: term ratio {ratio:.3e} >= 1")]
    SeriesTail { k: usize, ratio: f64 },

    #[error("scenario config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
