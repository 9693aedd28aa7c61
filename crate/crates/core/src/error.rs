use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {value} is outside the domain: {context}")]
    Domain { value: f64, context: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("field belongs to a different grid")]
    GridMismatch,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("potential is negative ({value}) at node {node}")]
    NegativePotential { node: usize, value: f64 },

    #[error("graph is not non-decreasing: g({}) = {} > g({}) = {}", .witness.0, .values.0, .witness.1, .values.1)]
    Monotonicity { witness: (f64, f64), values: (f64, f64) },

    #[error("descent direction vanishes (norm {norm:e})")]
    ZeroDirection { norm: f64 },

    #[error("no sign change found while bracketing the root")]
    NoBracket,

    #[error("problem too large for exhaustive search: {0}")]
    Size(String),
}

impl Error {
    pub(crate) fn domain(value: f64, context: impl Into<String>) -> Self {
        Error::Domain { value, context: context.into() }
    }
}
