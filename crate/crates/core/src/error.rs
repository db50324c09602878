use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("sample `{id}`: {message}")]
    InvalidSample { id: String, message: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The learner produced a non-finite loss.
    #[error("training diverged{}: loss = {loss}", .iteration.map(|t| format!(" at iteration {t}")).unwrap_or_default())]
    Diverged { iteration: Option<u64>, loss: f64 },

    #[error("incompatible runs: {0}")]
    Incompatible(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InvalidSample { .. }
                | Error::InvalidDataset(_)
                | Error::InvalidParam(_)
                | Error::Incompatible(_)
        )
    }
}
