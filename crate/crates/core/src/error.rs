use thiserror::Error;

/// Errors produced by tensor algebra, decomposition and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("rank {rank} exceeds dimension {dim} in mode {mode}")]
    RankExceedsDimension { mode: usize, rank: usize, dim: usize },

    #[error("singular map: transformed column {column} has norm {norm:e}")]
    SingularMap { column: usize, norm: f64 },

    #[error("factor {mode} has a zero column ({column}); coherence is undefined")]
    ZeroColumn { mode: usize, column: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("relative fit is undefined for a zero-norm data tensor")]
    ZeroNorm,

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
