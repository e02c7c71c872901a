//! One error type for the whole pipeline. Variants map onto the failure
//! classes the stages can hit, so callers (and the CLI exit-code mapping)
//! can match on them without string inspection.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Two taxonomy rows normalize to the same canonical key.
    #[error("duplicate taxonomy key {key:?} (rows {first} and {second})")]
    DuplicateCategory {
        key: String,
        first: usize,
        second: usize,
    },

    /// Malformed text or binary input (taxonomy rows, config lines, tensor
    /// and checkpoint files, PPM headers).
    #[error("parse error: {0}")]
    Parse(String),

    /// A taxonomy file with no category rows.
    #[error("taxonomy contains no categories")]
    EmptyTaxonomy,

    /// Input bytes are not valid UTF-8.
    #[error("encoding error: {0}")]
    Encoding(String),

    /// A corpus line that is not a well-formed record.
    #[error("malformed record at byte {offset}: {msg}")]
    MalformedRecord { offset: usize, msg: String },

    /// An empty or inverted date/parameter range.
    #[error("invalid range: {0}")]
    InvalidRange(String),

    /// A timestamp outside the configured sampling range.
    #[error("timestamp {ts} of {sample_id:?} outside sampling range")]
    OutOfRange { sample_id: String, ts: i64 },

    /// Tensor shapes incompatible with the requested operation.
    #[error("shape error: {0}")]
    Shape(String),

    /// Non-finite values, failed convergence, or other numeric trouble.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Labels outside the target space or not in the expected encoding.
    #[error("label error: {0}")]
    Label(String),

    /// Augmentation parameters that cannot be applied to the given image.
    #[error("augment error: {0}")]
    Augment(String),

    /// Missing or inconsistent sentiment annotations.
    #[error("annotation error: {0}")]
    Annotation(String),

    /// Checkpoint does not match the current taxonomy or configuration.
    #[error("compatibility error: {0}")]
    Compatibility(String),

    /// A ranking metric was asked to score a row with no positive labels.
    #[error("no ground-truth positives in row")]
    NoGroundTruth,

    /// A batch metric was given nothing to aggregate.
    #[error("empty batch")]
    EmptyBatch,

    /// A per-class statistic needs both positives and negatives.
    #[error("degenerate class: {0}")]
    DegenerateClass(String),

    /// Cross-validation fold counts that cannot be satisfied.
    #[error("fold error: {0}")]
    Fold(String),

    /// A statistic that has no value on this input (e.g. rank correlation
    /// of a constant sequence). Reported instead of NaN.
    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
