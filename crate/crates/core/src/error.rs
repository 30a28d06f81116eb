//! Crate-wide error type.

use std::fmt;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidGridSpec(String),

    #[error("pixel index ({row}, {col}) outside {height}x{width} raster")]
    PixelOutOfRange {
        row: u32,
        col: u32,
        height: u32,
        width: u32,
    },

    #[error("unsupported horizon {0} s (supported: 3, 5, 8 s)")]
    UnsupportedHorizon(f64),

    #[error("negative speed {0} m/s")]
    NegativeSpeed(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("track {0} not found in scenario")]
    TargetNotFound(i64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("kernel {rows}x{cols} exceeds twice the {height}x{width} raster")]
    KernelTooLarge {
        rows: usize,
        cols: usize,
        height: usize,
        width: usize,
    },

    #[error("scenario validation failed at {0}")]
    Validation(#[from] ValidationError),

    #[error("raster format: {0}")]
    RasterFormat(String),

    #[error("prediction file: {0}")]
    PredictionFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A single scenario validation failure: machine-checkable kind plus the JSON
/// pointer of the offending element.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{pointer}: {kind}")]
pub struct ValidationError {
    /// JSON pointer path to the first offending element (e.g. `/tracks/3/states`).
    pub pointer: String,
    pub kind: ValidationErrorKind,
}

impl ValidationError {
    pub fn new(pointer: impl Into<String>, kind: ValidationErrorKind) -> Self {
        Self {
            pointer: pointer.into(),
            kind,
        }
    }
}

/// Validation failure classes, one per invariant the scenario loader enforces.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationErrorKind {
    /// The document is not parseable JSON (or has the wrong shape).
    MalformedJson(String),
    /// `history_len` differs from the required 11 frames.
    WrongHistoryLen { expected: u32, actual: u32 },
    /// More tracks than the 128-agent limit.
    TooManyTracks { limit: usize, actual: usize },
    /// A listed target id has no matching track.
    MissingTarget { target_id: i64 },
    /// A track's state count differs from `history_len`.
    StateCountMismatch { expected: usize, actual: usize },
    /// A track's future exceeds `future_len`.
    FutureTooLong { limit: usize, actual: usize },
    /// A valid state's `speed` disagrees with `|(vx, vy)|`.
    SpeedMismatch { speed: f64, magnitude: f64 },
    /// Negative `width` or `length` on a valid state.
    NegativeExtent { value: f64 },
    /// `timestep_s` is zero or negative.
    BadTimestep { value: f64 },
    /// A map polyline has fewer than two points.
    DegeneratePolyline { points: usize },
    /// Two tracks share an id.
    DuplicateTrackId { track_id: i64 },
    /// A numeric field on a valid state is NaN or infinite.
    NonFiniteValue,
}

impl fmt::Display for ValidationErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MalformedJson(msg) => write!(f, "malformed JSON: {msg}"),
            Self::WrongHistoryLen { expected, actual } => {
                write!(f, "history_len must be {expected}, got {actual}")
            }
            Self::TooManyTracks { limit, actual } => {
                write!(f, "at most {limit} tracks allowed, got {actual}")
            }
            Self::MissingTarget { target_id } => {
                write!(f, "target {target_id} has no matching track")
            }
            Self::StateCountMismatch { expected, actual } => {
                write!(f, "expected {expected} history states, got {actual}")
            }
            Self::FutureTooLong { limit, actual } => {
                write!(f, "future has {actual} states, limit is {limit}")
            }
            Self::SpeedMismatch { speed, magnitude } => {
                write!(f, "speed {speed} disagrees with |(vx,vy)| = {magnitude}")
            }
            Self::NegativeExtent { value } => write!(f, "negative extent {value}"),
            Self::BadTimestep { value } => write!(f, "timestep_s must be positive, got {value}"),
            Self::DegeneratePolyline { points } => {
                write!(f, "polyline needs at least 2 points, got {points}")
            }
            Self::DuplicateTrackId { track_id } => write!(f, "duplicate track id {track_id}"),
            Self::NonFiniteValue => write!(f, "non-finite numeric value"),
        }
    }
}
