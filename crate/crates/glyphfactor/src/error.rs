use std::path::PathBuf;

/// Errors produced by corpus handling, training, and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum GlyphError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Manifest parsing or validation failure, with the 1-based data row.
    #[error("manifest row {row}: {message}")]
    Manifest { row: usize, message: String },

    #[error("image error: {0}")]
    Image(String),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl GlyphError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GlyphError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn shape(context: impl Into<String>, expected: impl Into<String>, actual: impl Into<String>) -> Self {
        GlyphError::Shape {
            context: context.into(),
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    /// Process exit code: 1 for validation problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            GlyphError::Io { .. } | GlyphError::Checkpoint(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, GlyphError>;
