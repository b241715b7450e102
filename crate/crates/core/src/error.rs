use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline. Every variant carries the name of
/// the module that produced it so CLI diagnostics stay attributable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{module}: invalid argument: {msg}")]
    InvalidArgument { module: &'static str, msg: String },

    #[error("{module}: parse error in {path}: {msg}")]
    Parse {
        module: &'static str,
        path: String,
        msg: String,
    },

    #[error("ingest: alignment error: {0}")]
    Alignment(String),

    #[error("{module}: configuration error: {msg}")]
    Config { module: &'static str, msg: String },

    #[error("inference: cannot load model {path}: {msg}")]
    ModelLoad { path: String, msg: String },

    #[error("inference: {0}")]
    Inference(String),

    #[error("{module}: i/o error on {}: {source}", path.display())]
    Io {
        module: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(module: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidArgument {
            module,
            msg: msg.into(),
        }
    }

    pub fn config(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Config {
            module,
            msg: msg.into(),
        }
    }

    pub fn parse(module: &'static str, path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            module,
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub fn io(module: &'static str, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            module,
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by unreadable or malformed inputs, as opposed to
    /// failures inside the computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Io { .. }
                | Error::ModelLoad { .. }
                | Error::Config { .. }
                | Error::Alignment(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
