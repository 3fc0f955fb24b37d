use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FairIrtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FairIrtError {
    /// A value violates a domain type invariant or an operation precondition.
    #[error("{0}")]
    Input(String),

    /// Relative difference of a regression record with `y_original == 0`.
    #[error("undefined relative difference{0}")]
    UndefinedRelativeDifference(String),

    /// Mismatched matrix or parameter dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An operation required a constrained fit it did not get.
    #[error("{0}")]
    Constraint(String),

    /// Loss or gradient stopped being finite during fitting.
    #[error("non-finite {quantity} at epoch {epoch}, cell (model {model}, individual {individual})")]
    NonFinite {
        quantity: &'static str,
        epoch: usize,
        model: usize,
        individual: usize,
    },

    /// A fitted parameter ran into the boundary of its domain.
    #[error("{0}")]
    Saturated(String),

    /// A file could not be parsed; line numbers are 1-based.
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("unsupported format_version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FairIrtError {
    /// Stable, machine-parsable category name.
    pub fn category(&self) -> &'static str {
        match self {
            FairIrtError::Input(_) => "input",
            FairIrtError::UndefinedRelativeDifference(_) => "undefined",
            FairIrtError::Dimension(_) => "dimension",
            FairIrtError::Constraint(_) => "constraint",
            FairIrtError::NonFinite { .. } => "numeric",
            FairIrtError::Saturated(_) => "saturated",
            FairIrtError::Parse { .. } => "parse",
            FairIrtError::Version { .. } => "version",
            FairIrtError::Config(_) => "config",
            FairIrtError::Io { .. } => "io",
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            FairIrtError::Input(_) => 3,
            FairIrtError::UndefinedRelativeDifference(_) => 4,
            FairIrtError::Dimension(_) => 5,
            FairIrtError::Constraint(_) => 6,
            FairIrtError::NonFinite { .. } => 7,
            FairIrtError::Saturated(_) => 8,
            FairIrtError::Parse { .. } => 9,
            FairIrtError::Version { .. } => 10,
            FairIrtError::Config(_) => 11,
            FairIrtError::Io { .. } => 12,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FairIrtError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        FairIrtError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
