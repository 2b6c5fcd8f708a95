//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the arena, trainer, and harness layers.
#[derive(Debug, Error)]
pub enum ArenaError {
    /// A tensor/vector dimension did not match what an operation expected.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: String,
        expected: usize,
        got: usize,
    },

    /// A non-finite value appeared where finite numerics are required.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// An operation was called outside its contract (wrong arena shape,
    /// inactive ray, unknown team id, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid or inconsistent run/task configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Checkpoint or trajectory container could not be decoded.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ArenaError>;

impl ArenaError {
    pub fn shape(context: impl Into<String>, expected: usize, got: usize) -> Self {
        ArenaError::Shape {
            context: context.into(),
            expected,
            got,
        }
    }

    pub fn non_finite(context: impl Into<String>) -> Self {
        ArenaError::NonFinite {
            context: context.into(),
        }
    }
}
