use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("token id {token} out of range for vocabulary of size {vocab_size}")]
    Vocabulary { token: u32, vocab_size: usize },

    #[error("backend unavailable after {attempts} attempt(s): {message}")]
    BackendUnavailable { attempts: u32, message: String },

    #[error("protocol error: {message}")]
    Protocol { message: String, body: String },

    #[error("backend reported {code}: {message}")]
    Remote { code: String, message: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("score undefined: {0}")]
    UndefinedScore(String),

    #[error("decode failure at step {step}: {message}")]
    Decode { step: usize, message: String },

    #[error("scorer failed at decode step {step}: {source}")]
    Backend {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mock table line {line}: {message}")]
    MockTable { line: usize, message: String },

    #[error("unit {unit}: {source}")]
    Unit {
        unit: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the scoring backend rather than by the
    /// caller's input.
    pub fn is_backend(&self) -> bool {
        match self {
            Error::BackendUnavailable { .. } | Error::Protocol { .. } | Error::Remote { .. } => true,
            Error::Backend { .. } => true,
            Error::Unit { source, .. } => source.is_backend(),
            _ => false,
        }
    }
}
