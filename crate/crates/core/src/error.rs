use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("model state blew up (non-finite coordinate) at step {step}, t = {time}")]
    BlowUp { step: usize, time: f64 },

    #[error("singular matrix in {context}")]
    Singular { context: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("observation at t = {time} lies outside the assimilation window [{start}, {end}]")]
    ObsOutsideWindow { time: f64, start: f64, end: f64 },

    #[error("empty averaging region for observation operator (center {center})")]
    EmptyRegion { center: usize },

    #[error("window {window} failed: {source}")]
    WindowFailed { window: usize, source: Box<Error> },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
