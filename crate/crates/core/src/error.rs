use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank {rank} out of range for {s} levels (need 2 <= rank < s)")]
    RankOutOfRange { rank: usize, s: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("arity mismatch: expected {expected}, got {got} ({what})")]
    Arity {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is numerically rank deficient (smallest eigenvalue {min_eigenvalue:e})")]
    NumericalRank { min_eigenvalue: f64 },

    #[error("correlation matrix is ill-conditioned (Cholesky failed at pivot {pivot}); try a larger nugget")]
    IllConditioned { pivot: usize },

    #[error("duplicate training point at indices {first} and {second}")]
    DuplicatePoint { first: usize, second: usize },

    #[error("invalid training data: {0}")]
    InvalidData(String),

    #[error("all {} optimizer starts failed: {}", diagnostics.len(), diagnostics.join("; "))]
    FitFailure { diagnostics: Vec<String> },

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("criterion undefined: {0}")]
    UndefinedCriterion(String),

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("invalid design: {property}: {detail}")]
    InvalidDesign { property: &'static str, detail: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
