use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Every failure the library reports. Parse errors carry the 1-based line
/// number of the offending line.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: malformed header: {detail}")]
    MalformedHeader { line: usize, detail: String },
    #[error("line {line}: malformed record: {detail}")]
    MalformedRecord { line: usize, detail: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: non-finite value")]
    NonFiniteValue { line: usize },
    #[error("line {line}: invalid label token `{label}`")]
    InvalidLabel { line: usize, label: String },
    #[error("line {line}: {detail}")]
    InvalidProbabilities { line: usize, detail: String },

    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    FeatureDimMismatch { expected: usize, found: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("no labeled id is present in every view")]
    EmptyIntersection,
    #[error("views are not aligned: {0}")]
    NotAligned(String),
    #[error("view mismatch: {0}")]
    ViewMismatch(String),
    #[error("score matrices use different classes")]
    ClassMismatch,
    #[error("score matrices use different ids or id order")]
    IdMismatch,

    #[error("training labels contain a single class")]
    SingleClassData,
    #[error("class `{class}` has {found} samples, at least {required} required")]
    TooFewSamples {
        class: String,
        found: usize,
        required: usize,
    },
    #[error("stage-2 training data has fewer than two passability classes")]
    Stage2SingleClass,
    #[error("passability label for `{id}` but it is not an evidence-positive sample")]
    MissingPassabilityLabels { id: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    TruncatedPixelData { expected: usize, found: usize },
    #[error("endpoint {endpoint} ({x},{y}) outside {width}x{height} image")]
    EndpointOutOfBounds {
        endpoint: &'static str,
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },
    #[error("bins per channel must divide 256, got {0}")]
    InvalidBins(u32),
    #[error("image `{0}` not available")]
    MissingImage(String),

    #[error("prediction and truth lengths differ: {pred} vs {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("no samples to evaluate")]
    EmptyInput,
}
