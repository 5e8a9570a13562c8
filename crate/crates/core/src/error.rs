use std::collections::BTreeMap;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the region where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid simulation, grid or solver configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A model object violates one of its construction invariants.
    #[error("invalid model: {0}")]
    Construction(String),

    /// The operation has a pole at the requested input.
    #[error("singularity: {0}")]
    Singularity(String),

    /// Two routes to the same quantity disagree beyond tolerance.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        diagnostics: BTreeMap<String, f64>,
    },
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, diagnostics: &[(&str, f64)]) -> Self {
        Error::Numerical {
            message: message.into(),
            diagnostics: diagnostics.iter().map(|(k, v)| ((*k).to_string(), *v)).collect(),
        }
    }

    /// True for failures caused by the caller's inputs rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numerical { .. } | Error::Consistency(_))
    }
}
