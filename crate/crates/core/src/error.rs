use thiserror::Error;

use crate::measurement::Unit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid feature `{feature}`: {message}")]
    Invariant { feature: String, message: String },

    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),

    #[error("`{referrer}` references unknown feature `{missing}`")]
    DanglingReference { referrer: String, missing: String },

    #[error("feature `{feature}` has no {column} measurement")]
    MissingSource { feature: String, column: String },

    #[error("feature `{0}` has no site coordinates")]
    MissingCoordinates(String),

    #[error("unit mismatch: {left} vs {right}")]
    UnitMismatch { left: Unit, right: Unit },

    #[error("division by zero")]
    DivisionByZero,

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("circle fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("infeasible null prior: {0}")]
    InfeasiblePrior(String),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
