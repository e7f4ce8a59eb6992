use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the measures can report.
///
/// Variants are grouped by the exit category the CLI maps them to; see
/// [`Error::category`].
#[derive(Debug, Error)]
pub enum Error {
    // input errors
    #[error("no frames found in {0}")]
    NoFramesFound(PathBuf),
    #[error("inconsistent frame dimensions in {file}: expected {expected}, found {found}")]
    InconsistentDimensions {
        file: PathBuf,
        expected: String,
        found: String,
    },
    #[error("failed to decode {file}: {reason}")]
    DecodeError { file: PathBuf, reason: String },
    #[error("duplicate frame index {index} ({file})")]
    DuplicateFrameIndex { index: u64, file: PathBuf },
    #[error("invalid frame pattern {0:?}: expected something like \"%08d.png\"")]
    BadPattern(String),
    #[error("invalid frame sequence: {0}")]
    InvalidSequence(String),
    #[error("reference and test sequences differ: {0}")]
    SequenceMismatch(String),
    #[error("crop {crop_h}x{crop_w} larger than frame {frame_h}x{frame_w}")]
    CropTooLarge {
        crop_h: usize,
        crop_w: usize,
        frame_h: usize,
        frame_w: usize,
    },
    #[error("row {row} out of bounds for frame height {height}")]
    RowOutOfBounds { row: usize, height: usize },
    #[error("frame range {start}..{end} outside sequence of {len} frames")]
    FrameRangeOutOfBounds { start: usize, end: usize, len: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error at {location}: {reason}")]
    Config { location: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // file format errors
    #[error("{0}: bad .flo magic")]
    BadMagic(PathBuf),
    #[error("{0}: truncated file")]
    TruncatedFile(PathBuf),
    #[error("{path}: malformed score file: {reason}")]
    MalformedScores { path: PathBuf, reason: String },
    #[error("{path}: unknown metric tag {tag:?}")]
    UnknownMetricTag { path: PathBuf, tag: String },
    #[error("{path}: missing score for frame {frame}")]
    MissingFrame { path: PathBuf, frame: usize },
    #[error("{path}: malformed NIQE model: {reason}")]
    MalformedModel { path: PathBuf, reason: String },
    #[error("{path}: report schema mismatch: {reason}")]
    SchemaMismatch { path: PathBuf, reason: String },

    // metric errors
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("pyramid of {levels} levels at scale {scale} shrinks {height}x{width} below 8 px")]
    TooManyPyramidLevels {
        levels: usize,
        scale: f64,
        height: usize,
        width: usize,
    },
    #[error("missing flow file for frame pair {pair} ({path})")]
    MissingFlowFile { pair: usize, path: PathBuf },
    #[error("degenerate displacement at frame {0}: consecutive points coincide")]
    DegenerateDisplacement(usize),
    #[error("non-finite values in perceptual response of frame {0}")]
    DegenerateFrame(usize),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("too few frames: {what} needs at least {needed}, got {got}")]
    TooFewFrames {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("only {found} patches selected, at least {needed} required")]
    InsufficientPatches { found: usize, needed: usize },
    #[error("NSS feature {0} has zero variance across the corpus")]
    SingularFeatures(usize),
    #[error("frame {height}x{width} too small for {patch}px patches (need at least 4)")]
    FrameTooSmall {
        height: usize,
        width: usize,
        patch: usize,
    },
    #[error("temporal score {pq_temporal} is not positive (spatial score {pq_spatial})")]
    NonPositiveTemporal { pq_spatial: f64, pq_temporal: f64 },
    #[error("empty series")]
    EmptySeries,

    // missing external inputs
    #[error("missing external scores: {0}")]
    MissingExternalScores(String),
}

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Input,
    Metric,
    MissingScores,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Input => 2,
            ErrorCategory::Metric => 3,
            ErrorCategory::MissingScores => 4,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            NoFramesFound(_)
            | InconsistentDimensions { .. }
            | DecodeError { .. }
            | DuplicateFrameIndex { .. }
            | BadPattern(_)
            | InvalidSequence(_)
            | SequenceMismatch(_)
            | CropTooLarge { .. }
            | RowOutOfBounds { .. }
            | FrameRangeOutOfBounds { .. }
            | InvalidParameter(_)
            | Config { .. }
            | Io { .. }
            | BadMagic(_)
            | TruncatedFile(_)
            | MalformedScores { .. }
            | UnknownMetricTag { .. }
            | MalformedModel { .. }
            | SchemaMismatch { .. } => ErrorCategory::Input,
            MissingFrame { .. } | MissingExternalScores(_) => ErrorCategory::MissingScores,
            DimensionMismatch(_)
            | TooManyPyramidLevels { .. }
            | MissingFlowFile { .. }
            | DegenerateDisplacement(_)
            | DegenerateFrame(_)
            | LengthMismatch(_)
            | TooFewFrames { .. }
            | InsufficientPatches { .. }
            | SingularFeatures(_)
            | FrameTooSmall { .. }
            | NonPositiveTemporal { .. }
            | EmptySeries => ErrorCategory::Metric,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
