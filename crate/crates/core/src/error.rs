use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector has no positive entry")]
    AllZero,
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("entries sum to {sum}, expected 1 within 1e-6")]
    NotNormalized { sum: f64 },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("class index {index} out of range for {num_classes} classes")]
    IndexOutOfRange { index: usize, num_classes: usize },

    #[error("prediction set is empty")]
    EmptySet,
    #[error("duplicate record id {0}")]
    DuplicateId(u64),
    #[error("record {id} has mixed labels; use the generalized CMI")]
    MixedLabels { id: u64 },
    #[error("class {class} has no label mass")]
    EmptyClass { class: usize },
    #[error("replica grouping is inconsistent: {0}")]
    GroupCoverage(String),
    #[error("second pass did not replay the first: {0}")]
    ReplayMismatch(String),
    #[error("subsample produced no records")]
    EmptyResult,
    #[error("invalid fraction {0}, expected a value in (0, 1]")]
    InvalidFraction(f64),

    #[error("crop offset ({x}, {y}) out of range for pad {pad}")]
    OffsetOutOfRange { x: usize, y: usize, pad: usize },
    #[error("jitter factor {name}={value} outside [{min}, {max}]")]
    FactorOutOfRange { name: &'static str, value: f64, min: f64, max: f64 },
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid augmentation spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate augmentation name {0:?}")]
    DuplicateName(String),
    #[error("reports disagree on class count: {expected} vs {found}")]
    ClassCountMismatch { expected: usize, found: usize },
    #[error("degenerate input for rank correlation: {0}")]
    DegenerateInput(&'static str),
    #[error("no accuracy given for {0:?}")]
    MissingAccuracy(String),

    #[error("{path}: size {len} is not a multiple of {record} bytes")]
    TruncatedFile { path: PathBuf, len: u64, record: u64 },
    #[error("label {label} out of range for {num_classes} classes (record {record})")]
    LabelOutOfRange { record: usize, label: usize, num_classes: usize },
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("header declares {expected} records, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("unsupported format version {0}")]
    VersionUnsupported(String),
    #[error("record {index}: {reason}")]
    BadRecord { index: usize, reason: String },
    #[error("bad magic bytes")]
    BadMagic,
    #[error("truncated data at byte offset {offset}")]
    Truncated { offset: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for malformed or inconsistent input files.
    pub fn is_format_error(&self) -> bool {
        matches!(
            self,
            Error::TruncatedFile { .. }
                | Error::LabelOutOfRange { .. }
                | Error::BadHeader(_)
                | Error::BadLine { .. }
                | Error::CountMismatch { .. }
                | Error::VersionUnsupported(_)
                | Error::BadRecord { .. }
                | Error::BadMagic
                | Error::Truncated { .. }
                | Error::Json(_)
                | Error::ReplayMismatch(_)
        )
    }
}
