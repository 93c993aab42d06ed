use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("label {label} out of range (n_labels = {n_labels})")]
    LabelOutOfRange { label: usize, n_labels: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("empty stream: at least one sample is required")]
    EmptyStream,

    #[error("stream exhausted after {got} samples but n_iter = {requested}")]
    StreamTooShort { requested: usize, got: usize },

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("bad magic number in {path}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("bad snapshot header: expected {expected:?}, found {found:?}")]
    BadSnapshotHeader {
        expected: &'static str,
        found: String,
    },

    #[error("truncated file {path}: needed {needed} bytes, got {got}")]
    Truncated {
        path: PathBuf,
        needed: u64,
        got: u64,
    },

    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("bad record size in {path}: {len} bytes is not a multiple of {record}")]
    BadRecordSize {
        path: PathBuf,
        len: u64,
        record: u64,
    },

    #[error("checksum mismatch for {file}: expected {expected}, computed {actual}")]
    ChecksumMismatch {
        file: String,
        expected: String,
        actual: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bad task split: {0}")]
    BadSplit(String),

    #[error("scenario/label-space mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("unknown sweep parameter {0:?}")]
    UnknownSweepParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("download failed: {0}")]
    Fetch(#[from] reqwest::Error),
}

impl Error {
    /// Stable machine-readable tag for CLI error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::LabelOutOfRange { .. } => "label_out_of_range",
            Error::NonFinite(_) => "non_finite",
            Error::EmptyStream => "empty_stream",
            Error::StreamTooShort { .. } => "stream_too_short",
            Error::EmptyCandidates => "empty_candidates",
            Error::EmptyDataset => "empty_dataset",
            Error::BadMagic { .. } => "bad_magic",
            Error::BadSnapshotHeader { .. } => "bad_snapshot_header",
            Error::Truncated { .. } => "truncated",
            Error::CountMismatch { .. } => "count_mismatch",
            Error::BadRecordSize { .. } => "bad_record_size",
            Error::ChecksumMismatch { .. } => "checksum_mismatch",
            Error::Config(_) => "config",
            Error::BadSplit(_) => "bad_split",
            Error::ScenarioMismatch(_) => "scenario_mismatch",
            Error::UnknownSweepParameter(_) => "unknown_sweep_parameter",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Toml(_) => "toml",
            Error::Fetch(_) => "fetch",
        }
    }
}
