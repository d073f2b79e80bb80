use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("capacity error: {what} is {actual}, limit is {limit}")]
    Capacity {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("unknown variable q{0}")]
    UnknownVariable(usize),

    #[error("quadratization plan error: {0}")]
    Plan(String),

    #[error("penalty error: {0}")]
    Penalty(String),

    #[error("no embedding found; unplaced logical variables: {unplaced:?}")]
    EmbeddingFailed { unplaced: Vec<usize> },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("integration failed: {0}")]
    StepFailure(String),

    #[error("unknown fixture '{0}'")]
    UnknownFixture(String),

    #[error("stage '{stage}' failed on {artifact}: {source}")]
    Stage {
        stage: &'static str,
        artifact: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } => 3,
            Error::Stage { source, .. } => source.exit_code(),
            Error::EmbeddingFailed { .. } | Error::StepFailure(_) => 4,
            Error::Io(_) => 4,
            _ => 2,
        }
    }

    pub fn in_stage(self, stage: &'static str, artifact: impl Into<String>) -> Self {
        Error::Stage {
            stage,
            artifact: artifact.into(),
            source: Box::new(self),
        }
    }
}

pub(crate) fn check_capacity(what: &'static str, actual: usize, limit: usize) -> Result<()> {
    if actual > limit {
        return Err(Error::Capacity {
            what,
            actual,
            limit,
        });
    }
    Ok(())
}
