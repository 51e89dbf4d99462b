use std::io;

use thiserror::Error;

/// Errors produced by the compression library.
///
/// The variants map onto the process exit codes used by the command-line
/// front end (see [`T4dtError::exit_code`]).
#[derive(Debug, Error)]
pub enum T4dtError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index out of range in mode {mode}: index {index} >= size {size}")]
    ModeIndex { mode: usize, index: usize, size: usize },

    #[error("out of range: {0}")]
    Range(String),

    #[error("memory budget exceeded: {required} bytes required, {allowed} bytes allowed")]
    Budget { required: u128, allowed: u128 },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, T4dtError>;

impl T4dtError {
    /// Exit code convention: 0 ok, 1 validation, 2 range, 3 I/O, 4 resource budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            T4dtError::Validation(_) | T4dtError::ShapeMismatch(_) => 1,
            T4dtError::ModeIndex { .. } | T4dtError::Range(_) => 2,
            T4dtError::Io(_) | T4dtError::Format(_) => 3,
            T4dtError::Budget { .. } => 4,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        T4dtError::Validation(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        T4dtError::ShapeMismatch(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        T4dtError::Range(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        T4dtError::Format(msg.into())
    }
}
