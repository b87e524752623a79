//! Brute-force reference in a truncated Fock basis `|0>, ..., |N-1>`.
//!
//! Nothing here relies on Gaussian-state algebra: the master equation is
//! integrated directly on density matrices and the stochastic Schrödinger
//! equation on state vectors, so the results independently check the
//! closed forms in [`crate::gaussian`], [`crate::unraveling`] and
//! [`crate::robustness`].

mod lindblad;
mod noise;
mod sparse;
mod sse;
mod states;

pub use lindblad::{
    evolve_density, lindblad_rhs, opo_model, steady_state, steady_state_with, survival_fock,
    DensityMatrix, LindbladModel, SteadyState, SteadyStateOptions, DENSITY_STEP,
    TRUNCATION_ERROR_TAIL, TRUNCATION_WARNING_TAIL,
};
pub use noise::{sample_noise, NoiseCorrelation};
pub use sparse::SparseOp;
pub use sse::{
    projector_increment, simulate_ensemble, sse_step, sse_step_with_increments, trace_distance,
    EnsembleStatistics, SseWorkspace,
};
pub use states::{
    density_moments, gaussian_pure_state, largest_density_eigenvalue, pure_moments, PureState,
    QuadratureOps,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Truncated oscillator Hilbert space of dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("Fock dimension must be >= 2, got {dim}")));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `a|n> = sqrt(n)|n-1>`.
    pub fn annihilation(&self) -> CMatrix {
        let mut a = CMatrix::zeros(self.dim, self.dim);
        for n in 1..self.dim {
            a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        a
    }

    pub fn creation(&self) -> CMatrix {
        self.annihilation().adjoint()
    }

    pub fn number(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_fn(self.dim, |n, _| Complex64::new(n as f64, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_matrix_elements() {
        let space = FockSpace::new(6).unwrap();
        let a = space.annihilation();
        for n in 1..6 {
            assert_eq!(a[(n - 1, n)].re, (n as f64).sqrt());
        }
        let n_op = space.creation() * &a;
        assert!((n_op - space.number()).norm() < 1e-14);
        assert!(FockSpace::new(1).is_err());
    }
}
