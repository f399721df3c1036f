use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
///
/// Errors split into two families that map onto process exit codes:
/// configuration/usage problems (`Invalid`, exit 1) and data problems
/// (everything else, exit 2).
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value or call argument violates its stated domain.
    #[error("invalid {what}: {why}")]
    Invalid { what: String, why: String },

    /// A text record failed to parse.
    #[error("{path}:{}: {message}", line.map(|l| l.to_string()).unwrap_or_else(|| "?".into()))]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },

    /// A binary container violated its format (magic, version, range).
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    /// A referenced file does not exist.
    #[error("missing file: {path}")]
    MissingFile { path: PathBuf },

    /// A category token is not covered by the active label space or table.
    #[error("unknown token {token:?}{}", context.as_ref().map(|c| format!(" ({c})")).unwrap_or_default())]
    MissingToken {
        token: String,
        context: Option<String>,
    },

    /// Mismatch between two data sources that must agree (label spaces,
    /// tensor shapes, video id sets).
    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(what: impl Into<String>, why: impl Into<String>) -> Self {
        Error::Invalid {
            what: what.into(),
            why: why.into(),
        }
    }

    pub fn mismatch(msg: impl Into<String>) -> Self {
        Error::Mismatch(msg.into())
    }

    /// Process exit code for the CLI: 1 for validation errors, 2 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
