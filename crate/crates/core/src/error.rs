use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the fitting engine and its front ends.
#[derive(Debug, Error)]
pub enum FairMarsError {
    /// Invalid user configuration: missing columns, bad λ, bad fold count.
    #[error("configuration error: {0}")]
    Config(String),

    /// A cell could not be parsed.
    #[error("parse error at data row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Structurally invalid data (empty file, missing values, non-finite values).
    #[error("data error: {0}")]
    Data(String),

    /// A caller broke an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The normal equations stayed singular after the ridge retry.
    #[error("rank deficiency: column {column} is linearly dependent on earlier columns")]
    RankDeficient { column: usize },

    /// Input row has the wrong number of features.
    #[error("input error: expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("model file error: {0}")]
    Model(String),

    #[error("unsupported model schema version {found} (this build reads version {expected})")]
    Version { found: u32, expected: u32 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FairMarsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FairMarsError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by how the program was invoked rather than by the data.
    pub fn is_config(&self) -> bool {
        matches!(self, FairMarsError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, FairMarsError>;
