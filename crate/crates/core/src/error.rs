use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{what}: bad magic {found}, expected {expected}")]
    BadMagic {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("{what}: truncated, expected {expected} bytes but found {found}")]
    Truncated {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what}: {found} bytes where {expected} were expected")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("count mismatch: {images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("record size mismatch: {len} bytes is not a multiple of the {record}-byte record")]
    RecordSize { len: usize, record: usize },

    #[error("label {label} at index {index} is out of range for {num_classes} classes")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        num_classes: usize,
    },

    #[error("duplicate index {0}")]
    DuplicateIndex(usize),

    #[error("indices are not contiguous from 0: index {0} is missing")]
    NonContiguous(usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty embedding set")]
    EmptyEmbedding,

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{0} requires oracle ordinary labels, none were supplied")]
    MissingOracle(&'static str),

    #[error("{0} requires cluster assignments, none were supplied")]
    MissingClusters(&'static str),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_)
            | Error::Config(_)
            | Error::MissingOracle(_)
            | Error::MissingClusters(_) => ErrorKind::Config,
            Error::Numeric(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}
