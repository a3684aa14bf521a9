//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Reading or writing a file failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file could not be decoded as an image.
    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    /// The file decoded fine but its pixel format is not supported.
    #[error("unsupported image format for {path}: {detail}")]
    Unsupported { path: PathBuf, detail: String },

    /// A raster was constructed with inconsistent dimensions or buffer size.
    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    /// Two rasters that must share dimensions do not.
    #[error("dimension mismatch: {context}: {expected:?} vs {got:?}")]
    DimensionMismatch {
        context: &'static str,
        expected: (u32, u32),
        got: (u32, u32),
    },

    /// A grayscale input was used where a binary mask is required.
    #[error("not a binary mask{}: pixel values other than {{0, 255}} (or {{0, 1}}) present", path_suffix(.path))]
    NotBinary { path: Option<PathBuf> },

    /// Parameter validation failed.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

fn path_suffix(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!(" ({})", p.display()),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
