use thiserror::Error;

/// Errors raised by model construction, evaluation, fitting and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unit index {index} out of range for population of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("pair ({0}, {0}) is not a valid pair of distinct units")]
    SelfPair(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite linear predictor at {location}")]
    NonFinite { location: String },

    #[error("Poisson linear predictor {eta} at {location} exceeds the cap {cap}")]
    PoissonOverflow { eta: f64, cap: f64, location: String },

    #[error("matrix is not positive definite (smallest eigenvalue {eigenvalue})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("state space of 2^{bits} states exceeds the enumeration cap of 2^{cap}")]
    StateSpaceTooLarge { bits: usize, cap: usize },

    #[error("ascent violated at iteration {iteration}: objective fell by {drop:e}")]
    AscentViolation { iteration: usize, drop: f64 },

    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("singular matrix: {0}")]
    Singular(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
