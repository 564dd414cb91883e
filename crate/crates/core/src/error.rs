use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A single violated configuration constraint, tagged with the dotted key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key `{key}` at line {line}, column {column}")]
    UnknownKey { key: String, line: usize, column: usize },
    #[error("{} constraint violation(s): {}", .0.len(), join(.0))]
    Constraints(Vec<Violation>),
}

impl ConfigError {
    /// Violations carried by a constraint error; empty for parse errors.
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Constraints(v) => v,
            _ => &[],
        }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: malformed data: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("usage error: {0}")]
    Usage(String),
}

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Domain(_) | SimError::Usage(_) => 1,
            SimError::Io { .. } | SimError::Format { .. } => 2,
        }
    }
}
