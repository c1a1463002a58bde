use thiserror::Error;

use crate::kinematics::ValidationReport;

/// Errors raised by the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The geometry does not define a reference frame (zero momentum axis,
    /// vanishing on-shell magnitude, zero separation where a direction is needed).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A detection branch was requested whose Heaviside gates are closed.
    #[error("branch {0} is kinematically closed")]
    InfeasibleBranch(crate::kinematics::Branch),

    /// The parameter set violates at least one kinematic constraint.
    #[error("infeasible parameters:\n{0}")]
    Infeasible(Box<ValidationReport>),

    /// An operation was invoked outside of its contract.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Auto-refining quadrature did not converge.
    #[error("quadrature did not converge after {points} points (last estimate {last_estimate:e})")]
    QuadratureFailure { last_estimate: f64, points: usize },

    /// The brute-force integrator disagreed with its own refinement.
    #[error("oracle grid under-resolved: refinement changed the density by {disagreement:e}")]
    Resolution { disagreement: f64 },

    /// Two tabulations were compared on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The observable has no decay to fit (B vanishes identically).
    #[error("no decay to fit: {0}")]
    NoDecay(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
