use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("direction is not a unit vector (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("divergent marginal moment (q = {q})")]
    DivergentMoment { q: f64 },

    #[error("variance-unsafe exponent q = {q} for dimension {dim}")]
    VarianceUnsafeExponent { q: f64, dim: usize },

    #[error("degenerate body for negative width")]
    DegenerateBody,

    #[error("proposition hypothesis violated: q = {q} must be smaller than k = {k}")]
    PropositionHypothesis { q: usize, k: usize },

    #[error("lemma hypothesis violated at k = {k}, t = {t}: need t >= max(sqrt(2(k-1)), 1)")]
    LemmaHypothesis { k: usize, t: f64 },

    #[error("negative argument: {0}")]
    NegativeArgument(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown body kind {0:?}; valid kinds are cube, ball, cross, simplex")]
    UnknownBody(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing column {missing:?}; available columns: {}", available.join(", "))]
    MissingColumn {
        missing: String,
        available: Vec<String>,
    },

    #[error("quadrature did not converge (estimated error {estimated_error:e})")]
    Quadrature { estimated_error: f64 },

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
