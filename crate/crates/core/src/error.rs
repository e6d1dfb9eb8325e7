use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error at line {line}: {msg}")]
    Csv { line: u64, msg: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("both classes must be present")]
    SingleClass,

    #[error("class `{label}` has {have} samples, needs at least {need}")]
    TooFewClassSamples {
        label: String,
        have: usize,
        need: usize,
    },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("output already exists (pass force to overwrite): {}", .0.display())]
    OutputExists(PathBuf),

    #[error("model container: {0}")]
    ModelFormat(String),
}

impl Error {
    /// Stable machine-readable kind tag, used by the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv { .. } => "csv",
            Error::EmptyDataset => "empty_dataset",
            Error::InvalidData(_) => "invalid_data",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::SingleClass => "single_class",
            Error::TooFewClassSamples { .. } => "too_few_class_samples",
            Error::InvalidConfig(_) => "invalid_config",
            Error::NonFinite(_) => "non_finite",
            Error::Diverged(_) => "diverged",
            Error::OutputExists(_) => "output_exists",
            Error::ModelFormat(_) => "model_format",
        }
    }
}
