use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNoConvergence { achieved: f64, requested: f64 },

    #[error("iterative solver stopped after {iterations} iterations with relative residual {residual:.3e}")]
    SolverNoConvergence { iterations: usize, residual: f64 },

    #[error("region of {sites} sites exceeds the limit of {limit} sites")]
    RegionTooLarge { sites: u128, limit: u128 },

    #[error("enumeration budget exceeded: {cost:.3e} > {budget:.3e}")]
    BudgetExceeded { cost: f64, budget: f64 },

    #[error("degenerate tilt: {0}")]
    DegenerateTilt(String),

    #[error("transfer operator is not contracting (norm {norm:.6} after {power} steps)")]
    NotContracting { power: usize, norm: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of a numerical method rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNoConvergence { .. } | Error::SolverNoConvergence { .. } | Error::NotContracting { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
