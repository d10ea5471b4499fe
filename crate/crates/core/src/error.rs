use std::path::PathBuf;

use chrono::NaiveDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: line {line}: {reason}", path.display())]
    MalformedRow { path: PathBuf, line: u64, reason: String },

    #[error("bar {date}: {reason}")]
    InvalidBar { date: NaiveDate, reason: String },

    #[error("duplicate bar for {date}")]
    DuplicateDate { date: NaiveDate },

    #[error("price series for {ticker} is empty")]
    EmptySeries { ticker: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} has insufficient history (first admissible index is {first_admissible})")]
    InsufficientHistory { index: usize, first_admissible: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training data must contain at least {required} samples of each class (got {negatives} negative, {positives} positive)")]
    InsufficientClasses {
        required: usize,
        negatives: usize,
        positives: usize,
    },

    #[error("class {class} has {count} samples, fewer than the {folds} folds requested")]
    ClassTooSmall { class: u8, count: usize, folds: usize },

    #[error("upscaling from {source_side} to {target_side} is not supported")]
    Upscale { source_side: usize, target_side: usize },

    #[error("classifier {0} is not available in this build")]
    UnsupportedClassifier(String),

    #[error("unsupported model file version {0}")]
    ModelVersion(u32),

    #[error("bad raw image file: {0}")]
    RawImage(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than by the caller or
    /// by the environment.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::MalformedRow { .. }
                | Error::InvalidBar { .. }
                | Error::DuplicateDate { .. }
                | Error::EmptySeries { .. }
                | Error::InsufficientHistory { .. }
                | Error::DimensionMismatch { .. }
                | Error::InsufficientClasses { .. }
                | Error::ClassTooSmall { .. }
                | Error::RawImage(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
