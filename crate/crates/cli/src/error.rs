use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Sampler(#[from] ramcmc::Error),
}

/// Machine-readable error printed on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (error, details) = match self {
            CliError::Parse { .. } => ("parse", Vec::new()),
            CliError::Validation(v) => ("validation", v.clone()),
            CliError::Io { .. } => ("io", Vec::new()),
            CliError::Sampler(_) => ("sampler", Vec::new()),
        };
        ErrorReport {
            error,
            message: self.to_string(),
            details,
        }
    }
}
