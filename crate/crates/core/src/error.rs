use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model or routine parameter is outside its admissible range.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// An argument (tilt, level, point) lies outside the domain of the operation.
    #[error("argument outside domain: {0}")]
    Domain(String),

    /// An iterative solver stopped without meeting its tolerance.
    #[error("solver failed after {iterations} iterations: {reason} (best bound {best_bound})")]
    SolverFailure {
        reason: String,
        iterations: usize,
        best_bound: f64,
    },

    /// Numerical integration did not reach its tolerance.
    #[error("quadrature failed: {0}")]
    Quadrature(String),

    /// The request is valid but too expensive to carry out.
    #[error("refused: {0}")]
    Refused(String),

    /// Malformed textual input (region or model descriptors).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
