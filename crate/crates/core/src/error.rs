use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window of half-width {half_width} around ({row}, {col}) overruns the image")]
    WindowOutOfBounds {
        row: usize,
        col: usize,
        half_width: usize,
    },

    #[error("clustering needs both groups non-empty")]
    EmptyGroup,

    #[error("no pixel with positive kernel weight")]
    EmptySupport,

    #[error("malformed image file: {0}")]
    Malformed(String),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
