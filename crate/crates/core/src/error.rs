use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", path.display())]
    NotFound { path: PathBuf },

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupt or unsupported image {}: {reason}", path.display())]
    Decode { path: PathBuf, reason: String },

    #[error("cannot encode image {}: {reason}", path.display())]
    Encode { path: PathBuf, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: u32,
        left_h: u32,
        right_w: u32,
        right_h: u32,
    },

    #[error("bin count mismatch: {0} vs {1}")]
    BinCountMismatch(usize, usize),

    #[error("empty histogram")]
    EmptyHistogram,

    #[error("crop rectangle {index} ({x},{y} {w}x{h}) exceeds image bounds {img_w}x{img_h}")]
    RectOutOfBounds {
        index: usize,
        x: u32,
        y: u32,
        w: u32,
        h: u32,
        img_w: u32,
        img_h: u32,
    },

    #[error("invalid crop spec: {0}")]
    CropSpec(String),

    #[error("network error talking to {endpoint}: {reason}")]
    Network { endpoint: String, reason: String },

    #[error("generation service returned {status}: {body}")]
    Service { status: u16, body: String },

    #[error("generation service payload could not be decoded: {0}")]
    Payload(String),

    #[error("embedding error: {0}")]
    Embedding(String),

    /// A numerical consistency check failed. Indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}
