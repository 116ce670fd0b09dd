use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate student id `{0}` in roster")]
    DuplicateStudent(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("session {session_id}: utterance {index} has no label")]
    Unlabeled { session_id: String, index: usize },

    #[error("session {0}: total labeled time is zero")]
    ZeroDuration(String),

    #[error("pair {0}: baseline scores are tied, no lower/higher student")]
    TiePair(String),

    #[error("degenerate chance agreement (p_e = 1)")]
    DegenerateAgreement,

    #[error("items without a resolution: {0:?}")]
    Unresolved(Vec<String>),

    #[error("rank-deficient design; collinear columns: {0:?}")]
    RankDeficient(Vec<String>),

    #[error("cluster-robust inference needs at least two clusters")]
    SingleCluster,

    #[error("zero variance with nonzero mean difference {mean}: t statistic is infinite")]
    InfiniteStatistic { mean: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("grade {grade}: {message}")]
    Standardization { grade: String, message: String },

    #[error("pairing category `{0}` has no observations")]
    EmptyCategory(String),

    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),

    #[error("run id mismatch: truth record is for {truth}, report is for {report}")]
    RunIdMismatch { truth: String, report: String },

    #[error("remote classifier unreachable after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },

    #[error("classifier protocol violation: {0}")]
    Protocol(String),

    #[error("config: {0}")]
    Config(String),

    #[error("truth check failed: {failures} of {total} estimates out of tolerance")]
    TruthCheckFailed { failures: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
