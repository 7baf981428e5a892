use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("size error: {0}")]
    Size(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("budget error: {budget} shots cannot cover {settings} measurement settings")]
    Budget { budget: u64, settings: usize },

    #[error("observable {observable} is not supported by an ensemble with bases {allowed}")]
    UnsupportedObservable { observable: String, allowed: String },

    #[error("budget exhausted: no budget up to {max_budget} met the criterion (best score {best_score:.6} vs target {target})")]
    Exhausted {
        max_budget: u64,
        best_score: f64,
        target: f64,
    },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
