use std::path::PathBuf;
use std::time::Duration;

use crate::scene::Violation;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed scenario: {0}")]
    Parse(String),

    #[error("invalid scene: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("degenerate polyline: {0}")]
    DegeneratePolyline(String),

    #[error("no assignable lane: none of {0} lanes passes the orientation gate")]
    NoAssignableLane(usize),

    #[error("scene {0} has no ground-truth future")]
    MissingGroundTruth(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("expected a {expected}-frame scene")]
    WrongFrame { expected: &'static str },

    #[error("predictor protocol violation: {0}")]
    Protocol(String),

    #[error("predictor timed out after {0:?}")]
    Timeout(Duration),

    #[error("predictor process failed: {0}")]
    ChildExit(String),

    #[error("response shape mismatch: {0}")]
    Shape(String),

    #[error("probabilities for frame {frame_index} sum to {sum} instead of 1")]
    Normalization { frame_index: usize, sum: f64 },

    #[error("probabilities not normalized: {0}")]
    NotNormalized(String),

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("length mismatch: expected {expected} waypoints, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("empty training set")]
    EmptyDataset,

    #[error("model file: {0}")]
    Model(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
