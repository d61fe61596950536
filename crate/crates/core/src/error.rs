use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate entry for ({row}, {col}) at line {line}")]
    DuplicateEntry { row: String, col: String, line: usize },

    #[error("entry ({row}, {col}) out of bounds for a {n_rows}x{n_cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("matrix has no observed entries")]
    EmptyMatrix,

    #[error("degenerate range: r_min={r_min} must be finite and below r_max={r_max}")]
    DegenerateRange { r_min: f64, r_max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("({row}, {col}) is observed, not an indirect interaction")]
    NotIndirect { row: usize, col: usize },

    #[error("({row}, {col}) has shortest order {actual:?}, not {requested}")]
    OrderMismatch {
        row: usize,
        col: usize,
        requested: usize,
        actual: Option<usize>,
    },

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("training diverged at entry ({row}, {col}) with learning rate {eta}")]
    Divergence { row: usize, col: usize, eta: f64 },

    #[error("undefined test: all paired differences are zero")]
    UndefinedTest,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
