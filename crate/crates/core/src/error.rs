use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by the layer that raises them; [`Error::exit_code`]
/// maps each group onto the CLI's exit status.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // ---- model validation
    #[error("model has no conditions")]
    EmptyConditionSet,
    #[error("model has no symptoms")]
    NoSymptoms,
    #[error("alphabet size must be at least 2, got {0}")]
    InvalidAlphabet(u32),
    #[error("condition `{name}` has non-positive probability {p}")]
    ZeroOrNegativeProbability { name: String, p: f64 },
    #[error("probabilities sum to {sum}, which differs from 1 by more than {tolerance:e}")]
    ProbabilitySumOutOfTolerance { sum: f64, tolerance: f64 },
    #[error("matrix entry ({row}, {col}) = {value} is outside the alphabet {{0..{}}}", .lambda - 1)]
    MatrixValueOutOfAlphabet {
        row: usize,
        col: usize,
        value: i64,
        lambda: u32,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },

    // ---- partitions and measures
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("symptom {0} was already applied to this partition")]
    SymptomAlreadyApplied(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("negative probability {0}")]
    NegativeProbability(f64),
    #[error("non-positive weight {0}")]
    NonpositiveWeight(f64),
    #[error("logarithm base must be at least 2, got {0}")]
    InvalidBase(u32),
    #[error("invalid block (p = {p}, size = {size})")]
    InvalidBlock { p: f64, size: usize },
    #[error("second partition is not a refinement of the first")]
    NotARefinement,

    // ---- planning and diagnosis
    #[error("tree does not match model: {0}")]
    TreeModelMismatch(String),
    #[error("observed value {value} for `{symptom}` contradicts every remaining condition")]
    ContradictoryObservation { symptom: String, value: u32 },
    #[error("value {value} is outside the alphabet {{0..{}}}", .lambda - 1)]
    ValueOutOfAlphabet { value: u32, lambda: u32 },
    #[error("node {0} is not a test node")]
    NotATestNode(usize),
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    // ---- oracle
    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
    #[error("instance too large for exhaustive search (n = {n}, t = {t}; limit 8 x 8)")]
    InstanceTooLarge { n: usize, t: usize },

    // ---- documents and IO
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit status for this error: 1 domain, 2 parse/IO, 4 contradiction.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) => 2,
            Error::ContradictoryObservation { .. } => 4,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
