use thiserror::Error;

/// Errors raised by the spectral toolkit.
///
/// Each variant corresponds to one failure class; the CLI maps every variant
/// to a distinct exit code (see [`Error::kind`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested evaluation would lose more precision than double
    /// arithmetic can deliver.
    #[error("precision limit exceeded: {0}")]
    Precision(String),

    /// An iterative eigen-solve did not converge.
    #[error("eigenvalue iteration did not converge for degree {degree}")]
    NonConvergence { degree: usize },

    /// The point handed to the avoidance construction is (numerically) a
    /// Laguerre zero.
    #[error("x0 = {x0} lies within {distance:e} of a zero of L_{degree}")]
    DegenerateInput { x0: f64, degree: usize, distance: f64 },

    /// A Gauss-Hermite rule with too few nodes to integrate the requested
    /// polynomial exactly.
    #[error("{nodes} quadrature nodes cannot integrate degree {degree} exactly (need {required})")]
    InsufficientNodes { nodes: usize, degree: usize, required: usize },

    /// A model specification violates its structural invariants.
    #[error("invalid model specification: {0}")]
    Spec(String),

    /// Converged eigenvalues do not cover the requested counting range.
    #[error("converged eigenvalues do not cover interval I_{first_uncovered}")]
    Coverage { first_uncovered: i64 },

    /// An operator handed to a symmetric routine is not symmetric.
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    /// Stable machine-readable identifier of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Precision(_) => "precision",
            Error::NonConvergence { .. } => "non_convergence",
            Error::DegenerateInput { .. } => "degenerate_input",
            Error::InsufficientNodes { .. } => "insufficient_nodes",
            Error::Spec(_) => "spec",
            Error::Coverage { .. } => "coverage",
            Error::Contract(_) => "contract",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
