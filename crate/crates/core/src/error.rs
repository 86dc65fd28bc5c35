use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid power trace: {0}")]
    InvalidTrace(String),

    #[error("window [{start}, {end}] s is outside the trace range [{trace_start}, {trace_end}] s")]
    WindowOutsideTrace {
        start: f64,
        end: f64,
        trace_start: f64,
        trace_end: f64,
    },

    #[error("invalid transfer window: start {start} s must precede end {end} s")]
    InvalidWindow { start: f64, end: f64 },

    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("no transfer activity found in trace")]
    NoActivity,

    #[error("normalization undefined for zero bytes")]
    ZeroBytes,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("fitted model is not positive over the sampled domain")]
    NonPositiveModel,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("no grid cell satisfies a throughput floor of {floor_mbps} Mbps")]
    UnsatisfiableFloor { floor_mbps: f64 },

    #[error("axis `{0}` is absent from the sweep")]
    AxisAbsent(&'static str),

    #[error("insufficient disk space at {path}: need {required} bytes, {available} available")]
    InsufficientSpace {
        path: PathBuf,
        required: u64,
        available: u64,
    },

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("http error for {url}: {message}")]
    Http { url: String, message: String },

    #[error("all {0} transfers failed: {1}")]
    AllTransfersFailed(usize, String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    PathIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn path_io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::PathIo {
            path: path.into(),
            source,
        }
    }
}
