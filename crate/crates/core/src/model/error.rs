use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: unsupported structure: {message}")]
    UnsupportedStructure {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("validation error on {element}: {reason}")]
    Validation { element: String, reason: String },
    #[error("missing config for {element}: `{reference}` does not resolve to a file ({path})")]
    MissingConfig {
        element: String,
        reference: String,
        path: String,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl SpecError {
    pub(crate) fn validation(element: impl Into<String>, reason: impl Into<String>) -> Self {
        SpecError::Validation {
            element: element.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
