//! Library error type.

use thiserror::Error;

/// Errors surfaced by the library. Variants are grouped so callers can map
/// them onto coarse exit classes (input-format vs numerical).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or configuration value.
    #[error("validation: {0}")]
    Validation(String),

    /// Malformed input data (CSV/TSV/model file). `line` is 1-based when known.
    #[error("input format at line {line}: {msg}")]
    InputFormat { line: usize, msg: String },

    /// Model file schema mismatch.
    #[error("model schema version {found} unsupported (expected {expected})")]
    SchemaVersion { expected: u32, found: u32 },

    /// Numerical failure (non-SPD system, non-finite intermediate, ...).
    #[error("numerical: {0}")]
    Numerical(String),

    /// Labels are all 0 or all 1: the likelihood is maximized at infinity and
    /// only the penalty keeps the MAP finite; the condition is flagged rather
    /// than silently fitted.
    #[error("degenerate labels: all {0}s (complete separation)")]
    DegenerateLabels(u8),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed input files rather than numerics.
    pub fn is_input_format(&self) -> bool {
        matches!(
            self,
            Error::InputFormat { .. } | Error::SchemaVersion { .. } | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
