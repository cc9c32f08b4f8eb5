use thiserror::Error;

use crate::model::SchemeId;
use crate::paths::PathKey;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cannot allocate a lattice with 2^{level} increments")]
    Capacity { level: u32 },

    #[error("scheme {0} cannot be used here")]
    WrongScheme(SchemeId),

    #[error("ALF implicit step did not converge (last iterate {last_iterate:e}, residual {residual:e})")]
    Nonconvergence { last_iterate: f64, residual: f64 },

    #[error("path {key} failed: {source}")]
    PathFailed {
        key: PathKey,
        #[source]
        source: Box<Error>,
    },

    #[error("{scheme} is not applicable at dt = {dt:e}: {failed}")]
    NotApplicable {
        scheme: SchemeId,
        dt: f64,
        failed: String,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
