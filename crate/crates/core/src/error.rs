use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {0:?} is not a valid {1}-subset of 0..{2}")]
    InvalidEdge(Vec<u32>, usize, usize),
    #[error("color {0} out of range 0..{1}")]
    InvalidColor(u32, usize),
    #[error("sample of size {0} requested from {1} vertices")]
    InvalidSample(usize, usize),
    #[error("incompatible shapes: {0}")]
    ShapeMismatch(String),
    #[error("exact enumeration needs {needed} items, limit is {limit}")]
    EnumerationTooLarge { needed: u128, limit: u64 },
    #[error("value out of range: {0}")]
    RangeError(String),
    #[error("{0} is not supported: {1}")]
    Unsupported(String, String),
    #[error("refinement loop exceeded iteration cap {cap} (last deviation {deviation})")]
    RegularityCapExceeded { cap: usize, deviation: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
