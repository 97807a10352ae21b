use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = EvocError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EvocError {
    #[error("agent id {id} out of range for a world of {count} agents")]
    InvalidAgent { id: usize, count: usize },

    #[error("{name} must be a probability in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed series CSV at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl EvocError {
    /// True for errors caused by bad user input rather than the environment.
    pub fn is_usage(&self) -> bool {
        !matches!(self, EvocError::Io { .. })
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(EvocError::InvalidProbability { name, value })
    }
}
