//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Error`]. The CLI maps
//! each variant onto a machine-parseable error class and process exit code
//! (see the `cli` module).

use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A computation produced or encountered a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Tensor or layer dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An operation was called with stale or missing cached state.
    #[error("invalid state: {0}")]
    State(String),

    /// Filesystem-level failure.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file's contents violate its documented format. `line` is 1-based
    /// when the problem is attributable to a single line.
    #[error("format error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Format { message: String, line: Option<usize> },

    /// A sentiment scorer failed on a headline.
    #[error("scorer failure: {0}")]
    Scorer(String),

    /// A series is constant where a spread is required.
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    /// Division by a zero actual value, reported with its index.
    #[error("division by zero at index {index}")]
    DivisionByZero { index: usize },

    /// A checkpoint's architecture tag does not match the requested one.
    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn format(msg: impl Into<String>, line: Option<usize>) -> Self {
        Error::Format { message: msg.into(), line }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short machine-parseable class name, stable across releases.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Argument(_) => "config-error",
            Error::Numeric(_) => "numeric-error",
            Error::Shape(_) => "shape-error",
            Error::State(_) => "state-error",
            Error::Io { .. } => "io-error",
            Error::Format { .. } => "format-error",
            Error::Scorer(_) => "scorer-error",
            Error::DegenerateSeries(_) => "degenerate-series",
            Error::DivisionByZero { .. } => "division-by-zero",
            Error::ArchitectureMismatch(_) => "architecture-mismatch",
        }
    }
}
