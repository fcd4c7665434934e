//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("model too large for exact enumeration: {units} units exceeds cap {cap}")]
    EnumerationCap { units: usize, cap: usize },

    #[error("non-finite parameter encountered in {0}")]
    NonFiniteParameter(&'static str),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("scale factor must be positive, got {0}")]
    NonPositiveScaleFactor(f64),

    #[error("no embedding found within {restarts} restarts")]
    EmbeddingNotFound { restarts: usize },

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("{what} coefficient {value} outside hardware range [{lo}, {hi}]")]
    CoefficientOutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("logical unit {0} is not present in the embedding")]
    UnitNotEmbedded(usize),

    #[error("relaxation did not converge within {cap} sweeps")]
    RelaxationCap { cap: usize },

    #[error("training diverged (non-finite parameter) at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("catalogs refer to different model checkpoints: {a:?} vs {b:?}")]
    CheckpointMismatch { a: String, b: String },

    #[error("all samples were rejected by the chain-break policy")]
    AllSamplesRejected,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
