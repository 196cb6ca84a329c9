use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum RbmError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Exact enumeration requested on a model beyond the hard caps.
    #[error("model too large for exact computation: {0}")]
    Capacity(String),

    #[error("chain state error: {0}")]
    State(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RbmError>;
