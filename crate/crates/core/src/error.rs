use std::path::PathBuf;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller combined objects that do not belong together
    /// (e.g. a field and an operator built on different grids).
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed configuration text.
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A configuration value failed validation.
    #[error("invalid configuration: {key} {message}")]
    Validation { key: String, message: String },

    /// A model violates a structural hypothesis (e.g. an odd exponent in the
    /// Burgers-Fisher source).
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A value left the range covered by a velocity grid.
    #[error("range error at cell {cell}: value {value} outside [{lo}, {hi}]")]
    Range {
        cell: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// The explicit scheme produced a non-finite value.
    #[error("numerical instability at step {step}: non-finite value in cell {cell}")]
    Instability { step: usize, cell: usize },

    /// The admissible time step collapsed.
    #[error("stiffness abort at t = {time}: dt = {dt:e} is below the underflow threshold")]
    Stiffness { time: f64, dt: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class: 2 for usage/config problems,
    /// 3 for numerical aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Instability { .. } | Error::Stiffness { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
