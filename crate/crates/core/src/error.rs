use thiserror::Error;

/// Errors produced by the segmentation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed image: {0}")]
    MalformedImage(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("degenerate polygon: {0} vertices (need at least 3)")]
    DegeneratePolygon(usize),
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("run lengths sum to {actual}, expected {expected}")]
    RunSumMismatch { expected: usize, actual: usize },
    #[error("malformed run-length token: {0}")]
    MalformedRunLength(String),
    #[error("covariance is not positive definite")]
    SingularCovariance,
    #[error("empty input")]
    EmptyInput,
    #[error("point ({x}, {y}) lies outside the search box")]
    PointOutsideBox { x: usize, y: usize },
    #[error("extreme clicks fall outside the {width}x{height} image")]
    ClicksOutOfBounds { width: usize, height: usize },
    #[error("box does not fit inside the {width}x{height} canvas")]
    BoxOutOfBounds { width: usize, height: usize },
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("invalid segmentation config: {0}")]
    InvalidConfig(String),
    #[error("click box has zero area")]
    DegenerateRegion,
    #[error("no annotation record could be evaluated")]
    NoValidRecords,
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
