use thiserror::Error;

use crate::model::{ClassId, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid network configuration: {0}")]
    InvalidConfig(ValidationReport),

    #[error("class {0} is not an open-access class with positive density")]
    NotServing(ClassId),

    #[error("class {0} is not present in the configuration")]
    UnknownClass(ClassId),

    #[error("RAT {0} has no open-access class with positive density")]
    NoOpenClassInRat(u32),

    #[error("interference integral diverges for path-loss exponent {0} (must exceed 2)")]
    Divergent(f64),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate}, error {error})")]
    NonConvergence { estimate: f64, error: f64, subdivisions: usize },

    #[error("closed form inapplicable: {0}")]
    ClosedFormInapplicable(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Divergent(_) | Error::NonConvergence { .. } | Error::NoSolution(_))
    }
}
