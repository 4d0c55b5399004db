use thiserror::Error;

/// Every failure the library can report.
///
/// The CLI maps [`Error::exit_code`] onto process exit codes: usage and parse
/// problems exit with 2, data-contract violations with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("weighted direction sum has zero length (perfectly opposed inputs)")]
    ZeroResultant,
    #[error("time series too short: {0}")]
    TooShort(String),
    #[error("non-finite position for agent {agent} at step {t}")]
    NonFinitePosition { agent: usize, t: usize },
    #[error("informed-agent set is empty")]
    EmptyInformedSet,
    #[error("dataset has no informed agent")]
    NoInformedAgent,
    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("infeasible threshold vector: components sum to {sum} (must be <= 1, each in [0, 1])")]
    InfeasibleKappa { sum: f64 },
    #[error("agent identities differ across events: {0}")]
    InconsistentAgents(String),
    #[error("classification needs at least two classes, found {0}")]
    SingleClass(usize),
    #[error("unlabeled events: {0}")]
    MissingLabel(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InconsistentAgents(_)
            | Error::SingleClass(_)
            | Error::MissingLabel(_)
            | Error::NoInformedAgent
            | Error::EmptyInformedSet => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
