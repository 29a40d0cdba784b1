// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("non-finite entry at line {line}, position {position}")]
    NonFinite { line: usize, position: usize },

    #[error("length {0} is not a power of two")]
    NotDyadic(usize),

    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("level {level} out of range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("invalid segment [{start}, {end}] for length {n}")]
    InvalidSegment { start: usize, end: usize, n: usize },

    #[error("problem too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("calibration did not reach the minimal model within {steps} grid steps")]
    CalibrationDiverged { steps: usize },

    #[error("estimator failed at replicate {replicate}: {source}")]
    Estimator {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid symbol '{symbol}' at position {position}")]
    InvalidSymbol { position: usize, symbol: char },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
