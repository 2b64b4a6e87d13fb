use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("vertex ({x}, {y}) outside {width}x{height} canvas")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: u32,
        height: u32,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("insufficient pool: {0}")]
    InsufficientPool(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}", parse_message(.path, .line, .message))]
    Parse {
        path: Option<PathBuf>,
        line: Option<usize>,
        message: String,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u64, expected: u64 },

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", .path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

fn parse_message(path: &Option<PathBuf>, line: &Option<usize>, message: &str) -> String {
    match (path, line) {
        (Some(p), Some(l)) => format!("parse error in {} line {l}: {message}", p.display()),
        (Some(p), None) => format!("parse error in {}: {message}", p.display()),
        (None, Some(l)) => format!("parse error at line {l}: {message}"),
        (None, None) => format!("parse error: {message}"),
    }
}

impl Error {
    pub fn parse(message: impl Into<String>) -> Self {
        Error::Parse {
            path: None,
            line: None,
            message: message.into(),
        }
    }

    pub fn parse_at_line(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: None,
            line: Some(line),
            message: message.into(),
        }
    }

    /// Attaches a file path to parse errors that do not carry one yet.
    pub fn with_path(self, p: impl Into<PathBuf>) -> Self {
        match self {
            Error::Parse {
                path: None,
                line,
                message,
            } => Error::Parse {
                path: Some(p.into()),
                line,
                message,
            },
            other => other,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse classification used by the CLI for its exit-code contract.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Io { .. } => ErrorKind::Io,
            Error::Image { source, .. } => match source {
                image::ImageError::IoError(_) => ErrorKind::Io,
                _ => ErrorKind::Validation,
            },
            _ => ErrorKind::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Io,
    Validation,
}
