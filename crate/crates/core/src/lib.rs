//! Continuous Markovian unravelings of the degenerate optical parametric
//! oscillator below threshold.
//!
//! The crate is split along the lines of the computation:
//!
//! - [`gaussian`]: exact single-mode Gaussian arithmetic (stationary moments,
//!   purity, largest eigenvalue, overlaps).
//! - [`unraveling`]: deterministic second-moment flow conditioned on a
//!   diffusive unraveling `u = r + ih`, its stationary pure covariance, the
//!   inverse map and the realizable-region boundaries.
//! - [`robustness`]: ensemble-average survival probability, survival time and
//!   the search for the maximally robust unraveling.
//! - [`fock`]: an independent brute-force check in a truncated Fock basis
//!   (Lindblad evolution, steady state, stochastic Schrödinger trajectories).
//! - [`oracle`]: side-by-side comparison of the Gaussian formulas with the
//!   Fock-basis numbers.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod oracle;
pub mod robustness;
pub mod unraveling;

pub use error::{Error, Result};
pub use gaussian::{
    gaussian_overlap, is_valid_quantum_covariance, largest_eigenvalue, purity,
    stationary_covariance, CovarianceMatrix, GaussianState, MeanVector, OpoModel,
};
pub use robustness::{
    evolved_moments, figure2_table, optimal_unraveling, robust_survival, robust_survival_time,
    survival_curve, survival_probability, survival_probability_integral, survival_time,
    Fig2Row, OptimizerConfig, OptimizationResult, Propagator, SurvivalCurve, SurvivalTime,
};
pub use unraveling::{
    integrate_covariance, integrate_unconditioned_covariance, moment_derivatives,
    realizable_region_boundary, stationary_covariance_for_unraveling,
    unconstrained_region_boundary, unraveling_for_covariance, weight_covariance,
    EnsembleDescriptor, InverseSolution, MomentDerivatives, RegionPoint, UnravelingParam,
};
