use thiserror::Error;

/// Errors produced by the pipeline crates.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation's inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix or tensor shapes do not agree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Channel label not present in the montage.
    #[error("unknown channel: {0}")]
    UnknownChannel(String),

    /// An epoch or window would extend past the end of the data.
    #[error("segment out of range: {0}")]
    OutOfRange(String),

    /// On-disk dataset is missing, truncated, or inconsistent with its metadata.
    #[error("dataset format error: {0}")]
    Format(String),

    /// Unsupported on-disk format version.
    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
