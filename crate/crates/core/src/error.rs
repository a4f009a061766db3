use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by record loading, the codecs and the wire format.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header {path}: {reason}")]
    Header { path: PathBuf, reason: String },

    #[error("unsupported signal format {0} (only format 212 is supported)")]
    UnsupportedFormat(u32),

    #[error("truncated signal: {0}")]
    TruncatedSignal(String),

    #[error("parse error at row {row}: {text:?}")]
    Parse { row: usize, text: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("range error: {0}")]
    OutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {0} != {1}")]
    LengthMismatch(usize, usize),

    #[error("value {value} does not fit in {width} bits")]
    Overflow { value: u64, width: u32 },

    #[error("unexpected end of bitstream")]
    EndOfStream,

    #[error("corrupt stream: {0}")]
    CorruptStream(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::CorruptStream(msg.into())
    }
}
