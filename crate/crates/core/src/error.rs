use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    #[error("truncated pixel payload: {0}")]
    TruncatedPayload(String),

    #[error("invalid pixel value {value} at ({x}, {y})")]
    InvalidPixel { x: usize, y: usize, value: f64 },

    #[error("image is {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("luminance coefficients must be nonnegative with a positive sum")]
    DegenerateCoefficients,

    #[error("invalid PU table: {0}")]
    InvalidTable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
        if a != b {
            return Err(Error::DimensionMismatch(a.0, a.1, b.0, b.1));
        }
        Ok(())
    }
}
