use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or constructor argument failed validation. `key` names
    /// the offending field.
    #[error("invalid `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("support truncation: {0}")]
    Truncation(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Validation { .. } | Error::Json(_) | Error::Truncation(_) => 2,
            Error::Numerical(_) | Error::NotFound(_) => 3,
            Error::Io(_) => 1,
            Error::Context { .. } => unreachable!(),
        }
    }
}
