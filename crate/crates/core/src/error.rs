use std::io;

use thiserror::Error;

/// Errors produced anywhere in the codec pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error("sample position ({x:.3}, {y:.3}) falls outside the source image")]
    BoundingBoxOverflow { x: f64, y: f64 },
    #[error("query point ({x:.3}, {y:.3}) is outside the covered hexagonal region")]
    OutsideCoverage { x: f64, y: f64 },
    #[error("{levels} decomposition levels is too many for a {rows}x{cols} array")]
    TooManyLevels { levels: usize, rows: usize, cols: usize },
    #[error("called on a quadrant root ({0}, {1})")]
    QuadrantRoot(usize, usize),
    #[error("({0}, {1}) is not a quadrant root")]
    NotARoot(usize, usize),
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::Dimensions(msg.into())
    }
}
