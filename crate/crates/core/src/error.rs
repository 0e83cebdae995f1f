//! Crate-wide error type.
//!
//! Variants map onto the CLI exit-code contract: validation/parse problems
//! exit 2, backend/transport problems exit 3, internal invariant breaches
//! exit 4.

use std::path::PathBuf;

use crate::dialogue::Transcript;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Filesystem failure; always names the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Bad input data: manifests, configs, preconditions.
    #[error("validation error: {0}")]
    Validation(String),

    /// A persisted artifact does not match its schema.
    #[error("parse error: {0}")]
    Parse(String),

    /// A persisted artifact declares a schema version this build cannot read.
    #[error("unsupported schema version {found:?} (supported: {supported:?})")]
    UnsupportedVersion { found: String, supported: String },

    /// A transcript turn violates the schema; names the turn.
    #[error("turn {index}: {message}")]
    Turn { index: usize, message: String },

    /// External endpoint failure. `retryable` marks transient transport
    /// conditions (connect errors, 5xx); `status` carries the HTTP status
    /// when one was received.
    #[error("transport error{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Transport {
        message: String,
        status: Option<u16>,
        retryable: bool,
    },

    /// A backend produced unusable output or broke its contract
    /// (e.g. wrong embedding dimension, non-finite values).
    #[error("backend contract error: {0}")]
    Contract(String),

    /// An internal invariant was violated; indicates a bug.
    #[error("internal invariant breach: {0}")]
    Internal(String),

    /// A debate aborted mid-run. Carries the partial transcript, already
    /// flagged incomplete, so callers can persist it instead of discarding
    /// the work done so far.
    #[error("debate aborted after {} turns: {source}", partial.turns.len())]
    Aborted {
        partial: Box<Transcript>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// Prefixes `context` onto the error message while keeping the variant
    /// (and thus the exit code) intact. Variants without a free-form
    /// message are returned unchanged.
    pub fn with_context(self, context: impl std::fmt::Display) -> Self {
        match self {
            Error::Validation(m) => Error::Validation(format!("{context}: {m}")),
            Error::Parse(m) => Error::Parse(format!("{context}: {m}")),
            Error::Contract(m) => Error::Contract(format!("{context}: {m}")),
            Error::Internal(m) => Error::Internal(format!("{context}: {m}")),
            Error::Transport {
                message,
                status,
                retryable,
            } => Error::Transport {
                message: format!("{context}: {message}"),
                status,
                retryable,
            },
            other => other,
        }
    }

    /// Exit code under the CLI contract: 2 usage/validation, 3
    /// backend/transport, 4 internal. An aborted debate reports the code of
    /// its underlying cause.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Validation(_)
            | Error::Parse(_)
            | Error::UnsupportedVersion { .. }
            | Error::Turn { .. } => 2,
            Error::Transport { .. } | Error::Contract(_) => 3,
            Error::Internal(_) => 4,
            Error::Aborted { source, .. } => source.exit_code(),
        }
    }
}
