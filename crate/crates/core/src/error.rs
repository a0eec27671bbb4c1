use thiserror::Error;

/// Failures raised by the simulator and the closed-form evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("Fock level {level} out of range for cutoff {cutoff}")]
    OutOfRange { level: usize, cutoff: usize },

    #[error("truncation insufficient: {what} = {mass:e} exceeds {limit:e} at cutoff {cutoff}")]
    TruncationInsufficient {
        what: &'static str,
        mass: f64,
        limit: f64,
        cutoff: usize,
    },

    #[error("incompatible operands: {0}")]
    Incompatible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("outcome probability {0:e} is below the conditioning threshold")]
    ZeroProbability(f64),

    #[error("no design point reaches P_YN >= {p_min}; best achievable is {max_probability}")]
    Infeasible { p_min: f64, max_probability: f64 },

    #[error("target state undefined: sin^2(phi) + |gamma|^2 cos^2(phi) vanishes")]
    UndefinedTarget,
}

pub type Result<T> = std::result::Result<T, Error>;
