//! CLI-level errors with a stable machine-readable kind.

use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Core(feedwalk_core::Error),
    Io { path: PathBuf, source: std::io::Error },
    Config(String),
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Short stable identifier for the error record.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                feedwalk_core::Error::NonFiniteAmplitude { .. } => "numeric-overflow",
                feedwalk_core::Error::ModelViolation { .. } => "model-violation",
                feedwalk_core::Error::Config(_) => "config",
                feedwalk_core::Error::Unstable { .. } => "unstable",
                feedwalk_core::Error::UnsupportedParameter { .. } => "unsupported-parameter",
                feedwalk_core::Error::DensityLimit { .. } => "density-limit",
                feedwalk_core::Error::InsufficientData { .. } => "insufficient-data",
                feedwalk_core::Error::FitFailure { .. } => "fit-failure",
                feedwalk_core::Error::Parse { .. } => "parse",
            },
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Checkpoint(_) => "checkpoint",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Checkpoint(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<feedwalk_core::Error> for CliError {
    fn from(e: feedwalk_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
