use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("unsupported character {0:?}")]
    UnsupportedCharacter(char),
    #[error("word has {0} symbols, more than the maximum of 10")]
    WordTooLong(usize),

    #[error("cannot read {path}: {reason}")]
    SourceUnreadable { path: String, reason: String },
    #[error("lexicon has no usable words")]
    EmptyLexicon,
    #[error("no lexicon word has a length in the requested range")]
    NoWordInRange,

    #[error("the true symbol of a channel sample cannot be OOV")]
    TruthIsOov,
    #[error("invalid calibration targets: top-1 {top1}, top-5 {top5}")]
    InvalidTargets { top1: f64, top5: f64 },
    #[error("calibration failed: reached top-1 {top1:.4}, top-5 {top5:.4}")]
    CalibrationFailed { top1: f64, top5: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },
    #[error("backward called without a recorded forward pass")]
    GraphNotRecorded,
    #[error("empty dataset")]
    EmptyDataset,

    #[error("network predicted OOV inside the word")]
    InteriorOov,
    #[error("network predicted OOV for every column")]
    EmptyPrediction,

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(expected: impl ToString, actual: impl ToString) -> Error {
    Error::ShapeMismatch {
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
