use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("point ({x}, {y}) coincides with {what}")]
    CoincidentPoint { x: f64, y: f64, what: &'static str },

    #[error("near-field region undefined for zero aperture")]
    ZeroAperture,

    #[error("regularized normal matrix is singular (estimated condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("location ({x}, {y}) is outside the map region")]
    OutsideRoi { x: f64, y: f64 },

    #[error("virtual-object library is empty")]
    EmptyLibrary,

    #[error("sensing entry is empty")]
    EmptySensingEntry,

    #[error("{0} is zero")]
    ZeroVector(&'static str),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(context: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
