use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("image has no pixels")]
    EmptyImage,
    #[error("image {width}x{height} is smaller than the required {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("raster of {width}x{height} needs {expected} values, got {actual}")]
    RasterSize {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("frames differ in size: {0}x{1} vs {2}x{3}")]
    FrameSizeMismatch(usize, usize, usize, usize),
    #[error("histograms have different bin counts ({0} vs {1})")]
    BinCountMismatch(usize, usize),
    #[error("histogram has zero mass")]
    DegenerateHistogram,
    #[error("bin count must be at least 1")]
    ZeroBins,
    #[error("interval {0}..={1} is not valid for an image of height {2}")]
    InvalidInterval(usize, usize, usize),
    #[error("need at least two cuts per axis (got {0} x, {1} y)")]
    TooFewCuts(usize, usize),
    #[error("cuts must be strictly increasing and span the frame")]
    InvalidCuts,
    #[error("band {0} has zero area")]
    ZeroArea(usize),
    #[error("band lies outside the {0}x{1} frame")]
    OutOfFrame(u32, u32),
    #[error("bands {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("bands cover {covered} of the {frame} frame pixels")]
    Coverage { covered: u64, frame: u64 },
    #[error("bands are not mergeable: {0}")]
    NotMergeable(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("training set is empty or lacks one of the classes")]
    InsufficientData,
    #[error("singular value decomposition did not converge")]
    SvdFailed,
}
