use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("response {value} at row {row}, column {column} is outside 0..={max}")]
    CategoryOutOfRange {
        row: usize,
        column: usize,
        value: i64,
        max: usize,
    },

    #[error("persons answering in a single category must be removed first (rows {rows:?})")]
    ConstantResponses { rows: Vec<usize> },

    /// A person could not be placed in any leaf (or in more than one).
    #[error("partition invariant violated: {0}")]
    Partition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ingestion failed: {0}")]
    Ingest(#[from] crate::io::IngestError),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
