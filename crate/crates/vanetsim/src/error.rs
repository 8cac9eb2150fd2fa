use std::fmt;

/// Error type shared by parsers, the network builder and the runtime.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("schema error in <{element}>: {msg}")]
    Schema { element: String, msg: String },
    #[error("build error: {0}")]
    Build(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn schema(element: impl fmt::Display, msg: impl fmt::Display) -> Self {
        Error::Schema {
            element: element.to_string(),
            msg: msg.to_string(),
        }
    }

    pub fn io(path: impl fmt::Display, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
