use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Result alias used across the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad input data: anthropometric tables, scenario files, presets.
    #[error("configuration error: {0}")]
    Config(String),

    /// A model or series that parsed but breaks an invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error in {path}{}: {message}", LineSuffix(*.line))]
    Parse {
        path: String,
        line: Option<usize>,
        message: String,
    },

    /// Caller broke a precondition (dimension mismatch, non-finite input, bad duration).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An objective produced a non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

struct LineSuffix(Option<usize>);

impl fmt::Display for LineSuffix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(line) => write!(f, " (line {line})"),
            None => Ok(()),
        }
    }
}
