use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("insufficient data: class {class} has {count} trace(s), at least {needed} required")]
    InsufficientData {
        class: u8,
        count: usize,
        needed: usize,
    },

    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid configuration ({} violation(s)):\n  {}", .0.len(), .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("refusing to overwrite existing file {0} (use --force)")]
    WouldOverwrite(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a scenario identifier to an error.
    pub fn in_scenario(self, scenario: impl Into<String>) -> Self {
        Error::Scenario {
            scenario: scenario.into(),
            source: Box::new(self),
        }
    }

    /// True for configuration-class failures (bad file, bad values, bad selector).
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::Parameter { .. } => true,
            Error::Scenario { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
