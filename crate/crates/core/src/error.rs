//! Error type shared by every pipeline stage.

use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("shape error: expected {expected} columns, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable kind, used in the CLI's error document.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Config(_) => "config",
            Error::Schema(_) => "schema",
            Error::Data(_) => "data",
            Error::Shape { .. } => "shape",
            Error::Contract(_) => "contract",
            Error::Numeric(_) => "numeric",
            Error::Diverged { .. } => "training",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::Degenerate(_) => "degenerate",
            Error::EmptyInput(_) => "empty_input",
            Error::Artifact(_) => "artifact",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// Process exit code: 2 input/config, 3 artifact, 4 numeric/training.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Artifact(_) => 3,
            Error::Numeric(_) | Error::Diverged { .. } => 4,
            _ => 2,
        }
    }
}
