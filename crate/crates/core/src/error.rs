use thiserror::Error;

/// Errors raised anywhere in the engine.
///
/// Variants are grouped by [`ErrorKind`] so front ends (the CLI, the socket
/// server) can map failures onto stable exit codes and event types without
/// matching every variant.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        row: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("out of range: {}", fields.join(", "))]
    Range { fields: Vec<String> },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("protocol error: `{action}` not allowed in phase `{phase}`; expected one of: {}", expected.join(", "))]
    Protocol {
        action: String,
        phase: String,
        expected: Vec<String>,
    },

    #[error("registry error: {0}")]
    Registry(String),

    #[error("version mismatch: found {found}, expected {expected}")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification of [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad or missing input data.
    Data,
    /// Bad configuration, parameters or call sequence.
    Config,
    /// Numerical divergence during training.
    Divergence,
    /// Filesystem or other environment failure.
    Environment,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. }
            | Error::Schema(_)
            | Error::UnsupportedFormat(_)
            | Error::EmptyInput(_)
            | Error::InsufficientData(_)
            | Error::Data(_)
            | Error::Registry(_)
            | Error::Json(_) => ErrorKind::Data,
            Error::Parameter(_)
            | Error::Range { .. }
            | Error::Protocol { .. }
            | Error::Version { .. } => ErrorKind::Config,
            Error::Divergence { .. } => ErrorKind::Divergence,
            Error::Io(_) => ErrorKind::Environment,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
