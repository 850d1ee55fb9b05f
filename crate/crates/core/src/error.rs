use std::path::PathBuf;

use crate::layout::Fault;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid layout: {}", format_faults(.0))]
    InvalidLayout(Vec<Fault>),

    #[error("missing background raster: {0}")]
    MissingBackground(&'static str),

    #[error("missing saliency map: {0}")]
    MissingSaliency(&'static str),

    #[error("raster is {got_w}x{got_h} but the canvas is {want_w}x{want_h}")]
    DimensionMismatch {
        want_w: u32,
        want_h: u32,
        got_w: u32,
        got_h: u32,
    },

    #[error("empty batch")]
    EmptyBatch,

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid task specification: {0}")]
    InvalidTaskSpec(String),

    #[error("could not parse any layout element from model output (first line: {first_line:?})")]
    UnrecoverableParse { first_line: String },

    #[error("layout has {got} elements, the token scheme allows {max}")]
    TooManyElements { max: usize, got: usize },

    #[error("category {0:?} is not in the token vocabulary")]
    UnknownCategoryToken(String),

    #[error("malformed token stream at position {position}: {reason}")]
    MalformedTokens { position: usize, reason: String },

    #[error("sequence of length {len} exceeds the policy table length {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("policy shape mismatch: {0}")]
    PolicyMismatch(String),

    #[error("invalid preference pair: {0}")]
    InvalidPair(String),

    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),

    #[error("evaluator gave no usable preference pairs during a full epoch (step {step}, {skips} pairs skipped)")]
    DegenerateFeedback { step: usize, skips: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed record {index} in {path}: {reason}")]
    MalformedRecord {
        path: PathBuf,
        index: usize,
        reason: String,
    },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from user input rather than an internal defect.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::PolicyMismatch(_))
    }
}

fn format_faults(faults: &[Fault]) -> String {
    faults
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
