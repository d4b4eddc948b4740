use thiserror::Error;

use crate::series::NormalizationMode;

/// Errors surfaced by series construction, index builds, queries and persistence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series must contain at least one value")]
    EmptySeries,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("subsequence [{start}, {start}+{len}) out of range for series of length {n}")]
    SubseqOutOfRange { start: usize, len: usize, n: usize },

    #[error("subsequence length {l} exceeds series length {n}")]
    LengthExceedsSeries { l: usize, n: usize },

    #[error("query length {query} does not match indexed length {index}")]
    QueryLengthMismatch { query: usize, index: usize },

    #[error("query frame is {frame:?} but index was built under {index:?}")]
    ModeMismatch {
        frame: NormalizationMode,
        index: NormalizationMode,
    },

    #[error("series length {frame} does not match the indexed series length {index}")]
    SeriesLengthMismatch { frame: usize, index: usize },

    #[error("{0:?} is not supported here: per-window z-normalization forces every mean to zero")]
    UnsupportedMode(NormalizationMode),

    #[error(
        "node capacities must satisfy 2 <= min and 2*min <= max+1, got min={mu_c} max={max_c}"
    )]
    InvalidCapacity { mu_c: usize, max_c: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("epsilon must be a finite non-negative number, got {0}")]
    InvalidEpsilon(f64),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed index data at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
