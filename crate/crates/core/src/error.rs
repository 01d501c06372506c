use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the search engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("image file not found: {}", path.display())]
    NotFound { path: PathBuf },

    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode image: {0}")]
    Decode(#[source] image::ImageError),

    #[error("failed to encode image to {}: {source}", path.display())]
    Encode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("image has zero extent ({rows}x{cols})")]
    EmptyImage { rows: usize, cols: usize },

    #[error("window at ({x}, {y}) of size {h}x{w} exceeds image of size {rows}x{cols}")]
    WindowOutOfBounds {
        x: usize,
        y: usize,
        h: usize,
        w: usize,
        rows: usize,
        cols: usize,
    },

    #[error("reference {ref_rows}x{ref_cols} is larger than image {rows}x{cols}")]
    ReferenceTooLarge {
        ref_rows: usize,
        ref_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("channel count mismatch: image has {image}, reference has {reference}")]
    ChannelMismatch { image: usize, reference: usize },

    #[error("time series of length {len} is too short to segment (need at least 2)")]
    SeriesTooShort { len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("planted shapes {first} and {second} overlap")]
    OverlappingShapes { first: usize, second: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
