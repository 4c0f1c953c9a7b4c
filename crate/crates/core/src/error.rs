use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    Dimensions(String),

    #[error("instance id {0} is not present in the label map")]
    MissingInstance(u32),

    #[error("distance to an empty source set is undefined")]
    EmptySource,

    #[error("instance {0} has an empty skeleton")]
    EmptySkeleton(u32),

    #[error("watershed needs at least one seed")]
    EmptySeeds,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("cannot place shapes: {0}")]
    Placement(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("png: {0}")]
    Png(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
