use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("requested {n_tap} taps but only {n_sub} subcarriers are available")]
    TooManyTaps { n_tap: usize, n_sub: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("every datapoint has zero received power")]
    ZeroPower,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("split stride {stride} exceeds dataset size {len}")]
    EmptySplit { stride: usize, len: usize },

    #[error("invalid split parameters: {0}")]
    SplitSpec(String),

    #[error("condition extent is degenerate in dimension {dim} (min = max = {value})")]
    DegenerateExtent { dim: usize, value: f64 },

    #[error("UE position coincides with array {array}")]
    CoincidentPosition { array: usize },

    #[error("position ({0}, {1}) lies outside the scenario bounds")]
    OutOfBounds(f64, f64),

    #[error("bin edges must be strictly increasing with at least two entries")]
    BadEdges,

    #[error("densities were built on different bin edges")]
    EdgeMismatch,

    #[error("empty value list{0}")]
    EmptyValues(String),

    #[error("zero variance input")]
    ZeroVariance,

    #[error("correlation matrix carries no signal (trace {0:e})")]
    NoSignal(f64),

    #[error("root phase maps outside the visible region (sin = {0})")]
    AmbiguousAngle(f64),

    #[error("need at least 3 distinct training positions, got {0}")]
    TooFewPoints(usize),

    #[error("training positions are collinear")]
    Collinear,

    #[error("triangle is degenerate (area {0:e})")]
    DegenerateTriangle(f64),

    #[error("position ({0}, {1}) lies outside the convex hull of the training set")]
    OutsideHull(f64, f64),

    #[error("layer width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid training configuration: {0}")]
    Config(String),

    #[error("loss became non-finite at generator step {step}")]
    NanLoss { step: u64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Failures decoding the binary `CSIT` dataset and `WGCK` checkpoint formats.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u16, found: u16 },

    #[error("truncated payload: needed {needed} bytes, {available} available")]
    Truncated { needed: u64, available: u64 },

    #[error("header declares {declared} payload bytes but file holds {actual}")]
    LengthMismatch { declared: u64, actual: u64 },

    #[error("corrupt header: {0}")]
    Header(String),

    #[error("metadata: {0}")]
    Metadata(#[from] serde_json::Error),
}

impl FormatError {
    /// Stable numeric code per failure class; used as part of CLI diagnostics.
    pub fn code(&self) -> u8 {
        match self {
            FormatError::BadMagic { .. } => 1,
            FormatError::VersionMismatch { .. } => 2,
            FormatError::Truncated { .. } => 3,
            FormatError::LengthMismatch { .. } => 4,
            FormatError::Header(_) => 5,
            FormatError::Metadata(_) => 6,
        }
    }
}
