use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage names used when an error is propagated out of [`crate::pipeline::run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Mask,
    Detect,
    Project,
    Track,
    Finalize,
    Interpolate,
    Merge,
    Bifurcate,
    Needle,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Mask => "mask",
            Stage::Detect => "detect",
            Stage::Project => "project",
            Stage::Track => "track",
            Stage::Finalize => "finalize",
            Stage::Interpolate => "interpolate",
            Stage::Merge => "merge",
            Stage::Bifurcate => "bifurcate",
            Stage::Needle => "needle",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("no points")]
    NoPoints,
    #[error("degenerate point set")]
    DegeneratePointSet,
    #[error("empty pose log")]
    EmptyPoseLog,
    #[error("pose at t={t} has a non-unit quaternion (norm {norm})")]
    InvalidQuaternion { t: f64, norm: f64 },
    #[error("pose log is not sorted by time at t={t}")]
    UnsortedPoseLog { t: f64 },
    #[error("non-monotonic frame: t={t} does not follow t={last}")]
    NonMonotonicFrame { t: f64, last: f64 },
    #[error("bifurcation at scan start")]
    BifurcationAtScanStart,
    #[error("empty scan")]
    EmptyScan,
    #[error("no frames")]
    NoFrames,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: malformed PGM: {msg}")]
    Pgm { path: PathBuf, msg: String },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("stage {stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }

    pub(crate) fn in_stage(self, stage: Stage) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// True for failures caused by files, formats or configuration rather
    /// than by the data being processed.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Json { .. }
            | Error::Pgm { .. }
            | Error::Format { .. }
            | Error::InvalidParam(_)
            | Error::InvalidQuaternion { .. }
            | Error::UnsortedPoseLog { .. } => true,
            Error::Stage { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
