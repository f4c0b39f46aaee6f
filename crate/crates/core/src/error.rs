use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("truncated PGM payload: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("pixel value {value} at index {index} is outside [0, 255]")]
    OutOfRange { index: usize, value: f64 },

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("region of interest has zero mean intensity")]
    ZeroMeanRoi,

    #[error("non-positive value {value} at index {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("degenerate histogram: no threshold separates two populated classes")]
    DegenerateHistogram,

    #[error("class '{0}' is empty")]
    EmptyClass(&'static str),

    #[error("class '{0}' has zero total membership")]
    DegenerateClass(&'static str),

    #[error("confusion counts are empty")]
    EmptyCounts,

    #[error("kappa is undefined: chance agreement equals 1")]
    UndefinedKappa,

    #[error("negative rmse {0}")]
    NegativeRmse(f64),
}
