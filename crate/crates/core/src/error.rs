use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the clustering, seeding and tuning routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("center list is empty")]
    EmptyCenters,

    #[error("clustering carries no centers")]
    MissingCenters,

    #[error("cluster is empty")]
    EmptyCluster,

    #[error("confusion matrix is not square ({rows} rows, row {row} has {cols} columns)")]
    NonSquare { rows: usize, row: usize, cols: usize },

    #[error("point set mismatch: clustering covers {found} points, target covers {target}")]
    PointSetMismatch { found: usize, target: usize },

    #[error("k exceeds point count (k = {k}, n = {n})")]
    KExceedsPoints { k: usize, n: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distance profile is degenerate: every candidate is at distance zero")]
    DegenerateProfile,

    #[error("seeding family violates its contract: {0}")]
    FamilyContract(String),

    #[error("breakpoint search has no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("sample is empty")]
    EmptySample,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
