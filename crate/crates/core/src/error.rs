use thiserror::Error;

/// Errors produced by the library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or unsupported geometry description.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Mesh size too coarse to resolve a feature of the geometry.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A mesh, field or matrix violates one of its structural invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// Malformed input file.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// Experiment configuration rejected; `pointer` is a JSON pointer into the config.
    #[error("config error at '{pointer}': {message}")]
    Config { pointer: String, message: String },

    /// A linear solve failed or did not reach its residual tolerance.
    #[error("solver error: {0}")]
    Solver(String),

    /// Internal consistency check failed (e.g. broken flux balance).
    #[error("internal consistency error: {0}")]
    Internal(String),

    /// Operation called outside of its supported preconditions.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the CLI: 2 config, 3 solver, 4 validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Unsupported(_) => 2,
            Error::Solver(_) | Error::Internal(_) | Error::Io(_) => 3,
            Error::Geometry(_)
            | Error::Resolution(_)
            | Error::Validation(_)
            | Error::Parse { .. }
            | Error::Dimension { .. } => 4,
        }
    }
}
