//! Momentum reconstruction from a pair of Unruh-deWitt detectors.
//!
//! A decaying particle of mass `M` and momentum `p` produces two particles of
//! mass `m` which are absorbed by two detectors with gaps `Δ₁`, `Δ₂`. Energy
//! and momentum conservation fix five of the six outgoing momentum components;
//! this crate evaluates the conditional density of the remaining one, the
//! azimuth `ψ` of `k₁` about `p`, together with its information content as a
//! function of the detector geometry, and an independent brute-force oracle
//! that rebuilds the same density from regularized delta functions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distribution;
pub mod error;
pub mod kinematics;
pub mod oracle;
pub mod quadrature;
pub mod specfun;
pub mod statistics;

pub use distribution::{
    interference_factor, phase_coefficients, sample, sample_with, ContextBuilder, DistributionContext,
    MatrixElement, MottFilter, Normalization, NormalizationSource, PhaseCoefficients, TabulatedDensity,
};
pub use error::{Error, Result};
pub use kinematics::{
    cos_theta, kappa, reconstruct_momenta, solve_classical_2d, validate_params, validate_params_with, Branch,
    BranchKinematics, ClassicalSolution, DetectorPair, ProcessParams, ValidationReport, Vec3,
};
pub use oracle::{brute_force_density, oracle_compare, Integrator, OracleReport, OracleSettings};
pub use specfun::{bessel_j0, spherical_j1_over_x};
pub use statistics::{best_guess, decay_exponent, shannon_entropy, tv_distance, BestGuess, DecayObservable, StatRow};
