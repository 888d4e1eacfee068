use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Why a matrix failed to be a dissimilarity matrix. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("matrix is empty")]
    Empty,

    #[error("matrix is not square: {rows} rows, {cols} columns")]
    NotSquare { rows: usize, cols: usize },

    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("entry ({row}, {col}) is not a number")]
    NotANumber { row: usize, col: usize },

    #[error("entry ({row}, {col}) is negative")]
    Negative { row: usize, col: usize },

    #[error("diagonal entry ({index}, {index}) is not zero")]
    NonzeroDiagonal { index: usize },

    #[error("entry ({row}, {col}) differs from ({col}, {row})")]
    Asymmetric { row: usize, col: usize },

    #[error("off-diagonal entry ({row}, {col}) is zero; distinct points must have positive dissimilarity")]
    NotDefinite { row: usize, col: usize },

    #[error("point {index} has {found} coordinates, expected {expected}")]
    PointDimension {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("point {index} has a non-finite coordinate")]
    NonFiniteCoordinate { index: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error(transparent)]
    Validation(#[from] ValidationError),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at line {line}, field {field}: cannot read {token:?}")]
    Parse {
        line: usize,
        field: usize,
        token: String,
    },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
