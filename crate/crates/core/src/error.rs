use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("empty input")]
    EmptyInput,

    /// Too few observations for the requested fit.
    #[error("insufficient data: need at least {needed} {what}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    /// Input has no spread (e.g. all values equal).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("fit did not converge")]
    NotConverged,

    #[error("invalid threshold schedule: {0}")]
    Schedule(String),

    #[error("calendar error: {0}")]
    Calendar(String),

    #[error("invalid mixture spec: {0}")]
    Spec(String),

    /// Malformed binary store; `offset` is the byte position where decoding failed.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors that come from reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Format { .. } | Error::Csv(_))
    }
}
