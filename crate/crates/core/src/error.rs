use std::path::PathBuf;

/// Errors raised across the toolkit. Each variant maps onto a distinct
/// process exit code in the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read or write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("length {len} is not a power of two (choose a pad policy)")]
    NonDyadic { len: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error{}: {message}", config_location(*line, key.as_deref()))]
    Config {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// Failure inside one study cell, tagged with its coordinates.
    #[error("{cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },
}

fn config_location(line: Option<usize>, key: Option<&str>) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!(" at line {l} (key `{k}`)"),
        (Some(l), None) => format!(" at line {l}"),
        (None, Some(k)) => format!(" (key `{k}`)"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            key: None,
            message: message.into(),
        }
    }

    /// Process exit code used by the CLI. Code 2 is left to argument parsing.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => 3,
            Error::Parse { .. } => 4,
            Error::NonDyadic { .. } => 5,
            Error::Input(_) => 6,
            Error::Config { .. } => 7,
            Error::Domain(_) => 8,
            Error::Numeric(_) => 9,
            Error::Cell { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
