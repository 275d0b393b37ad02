use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("record {index}: edge weight must be positive and finite, got {weight}")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("record {index}: self-loop on node {node:?}")]
    SelfLoop { index: usize, node: String },
    #[error("record {index}: empty node identifier")]
    EmptyNodeId { index: usize },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("requested {k} clusters but only {available} distinct points are available")]
    KTooLarge { k: usize, available: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("silhouette is undefined for a single cluster")]
    SingleCluster,
    #[error("cluster has no members")]
    EmptyCluster,
    #[error("could not generate a {label} ego graph after {attempts} attempts")]
    GenerationFailed { label: String, attempts: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("input {0} contains no usable records")]
    EmptyInput(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input or configuration, as opposed to
    /// failures of the environment (I/O) or of an algorithm at runtime.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_validation(),
            Error::Io(_) | Error::GenerationFailed { .. } => false,
            Error::Csv(e) => !matches!(e.kind(), csv::ErrorKind::Io(_)),
            Error::Json(e) => !e.is_io(),
            _ => true,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
