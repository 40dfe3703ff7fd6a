use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bit index {index} out of range for row of {len} bits")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("kernel contract violation: {0}")]
    Contract(String),

    #[error("class `{0}` has no training instances")]
    EmptyClass(&'static str),

    #[error("integer overflow while {0}")]
    Overflow(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown backend `{name}` (available: {available})")]
    UnknownBackend { name: String, available: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("row {row}, column `{column}`: cannot encode `{value}` as a number")]
    Encoding {
        row: usize,
        column: String,
        value: String,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("anti-contradiction filtering removed every {0} instance")]
    FilterEmptiedClass(&'static str),

    #[error("malformed model archive: {0}")]
    Archive(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
