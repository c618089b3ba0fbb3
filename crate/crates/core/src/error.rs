use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("tensor `{0}` not present in file")]
    MissingTensor(String),

    #[error("tensor `{name}` has dtype {found}, expected {expected}")]
    DtypeMismatch {
        name: String,
        expected: &'static str,
        found: &'static str,
    },

    #[error("tensor `{name}` has rank {found}, expected {expected}")]
    RankMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("malformed tensor container: {0}")]
    Format(String),

    #[error("malformed stats file at line {line}: {msg}")]
    StatsFormat { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("statistics are empty (count = 0)")]
    EmptyStats,

    #[error("missing statistics for layer `{0}`")]
    MissingStats(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("layer `{name}`: {source}")]
    Layer {
        name: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MissingFile(_) => "missing_file",
            Error::MissingTensor(_) => "missing_tensor",
            Error::DtypeMismatch { .. } => "dtype_mismatch",
            Error::RankMismatch { .. } => "rank_mismatch",
            Error::Format(_) => "format",
            Error::StatsFormat { .. } => "stats_format",
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "non_finite",
            Error::EmptyStats => "empty_stats",
            Error::MissingStats(_) => "missing_stats",
            Error::Config(_) => "config",
            Error::Layer { source, .. } => source.kind(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
