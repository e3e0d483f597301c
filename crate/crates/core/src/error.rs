use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability {value} outside the open interval (0, 1)")]
    ProbabilityOutOfRange { value: f64 },

    #[error("density evaluated at endpoint t = {0}")]
    DensityAtEndpoint(f64),

    #[error("correlation rho = {0} outside [0, 1)")]
    BadCorrelation(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("empty p-value list")]
    EmptyInput,

    #[error("spacing estimator needs m >= 2s + 1 (m = {m}, s = {s})")]
    TooFewForSpacing { m: usize, s: usize },

    #[error("spacing estimator saw a degenerate sample (maximal spacing is zero)")]
    DegenerateSpacing,

    #[error("null proportion estimate is zero")]
    ZeroNullEstimate,

    #[error("all-null network: slope is undefined at r0 = 1")]
    AllNull,

    #[error("no signal anywhere: every null proportion estimate equals 1")]
    NoSignal,

    #[error("grid parameter must be positive (got {0})")]
    BadEpsilon(f64),

    #[error("node {node}: rejection index {index} out of range ({len} p-values)")]
    IndexOutOfRange { node: usize, index: usize, len: usize },

    #[error("node {node}: rejection intervals overlap")]
    OverlappingIntervals { node: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown experiment id `{0}`")]
    UnknownExperiment(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("transcript parse error at line {line}: {msg}")]
    Transcript { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
