use num_complex::Complex64;

use super::sparse::SparseOp;
use super::states::PureState;
use super::{CMatrix, FockSpace};
use crate::error::{Error, Result};
use crate::gaussian::OpoModel;

/// Fixed RK4 step for density-matrix propagation.
pub const DENSITY_STEP: f64 = 0.01;

/// Top-level population above which the truncation is flagged.
pub const TRUNCATION_WARNING_TAIL: f64 = 1e-10;

/// Top-level population above which the truncation is an error.
pub const TRUNCATION_ERROR_TAIL: f64 = 1e-8;

/// `dρ/dt = -i[H, ρ] + Σ_k (c_k ρ c_k† - ½{c_k† c_k, ρ})`.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: CMatrix,
    collapse_ops: Vec<CMatrix>,
    // -iH - ½ Σ c†c and its adjoint.
    effective: SparseOp,
    effective_adj: SparseOp,
    collapse: Vec<SparseOp>,
    collapse_adj: Vec<SparseOp>,
}

impl LindbladModel {
    pub fn new(hamiltonian: CMatrix, collapse_ops: Vec<CMatrix>) -> Result<Self> {
        let n = hamiltonian.nrows();
        if !hamiltonian.is_square() || n < 2 {
            return Err(Error::InvalidParameter("Hamiltonian must be square with dim >= 2".into()));
        }
        if collapse_ops.iter().any(|c| c.shape() != (n, n)) {
            return Err(Error::InvalidParameter("collapse operators must match the Hamiltonian".into()));
        }
        let asym = (&hamiltonian - hamiltonian.adjoint()).camax();
        if asym > 1e-12 {
            return Err(Error::InvalidParameter(format!("Hamiltonian is not Hermitian (deviation {asym:e})")));
        }
        let mut effective = hamiltonian.map(|v| v * Complex64::new(0.0, -1.0));
        for c in &collapse_ops {
            effective -= (c.adjoint() * c).map(|v| v * 0.5);
        }
        Ok(Self {
            effective_adj: SparseOp::from_dense(&effective.adjoint()),
            effective: SparseOp::from_dense(&effective),
            collapse: collapse_ops.iter().map(SparseOp::from_dense).collect(),
            collapse_adj: collapse_ops.iter().map(|c| SparseOp::from_dense(&c.adjoint())).collect(),
            hamiltonian,
            collapse_ops,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[CMatrix] {
        &self.collapse_ops
    }

    pub(crate) fn effective(&self) -> &SparseOp {
        &self.effective
    }

    pub(crate) fn collapse_sparse(&self) -> &[SparseOp] {
        &self.collapse
    }
}

/// Oscillator master equation with a single damping channel `c = a` and the
/// squeezing Hamiltonian `H = i(chi/4)(a² - a†²)`, whose stationary state has
/// x-quadrature variance `1/(1+chi)`.
pub fn opo_model(model: &OpoModel, space: &FockSpace) -> LindbladModel {
    let a = space.annihilation();
    let a2 = &a * &a;
    let squeeze = &a2 - a2.adjoint();
    let h = squeeze.map(|v| v * Complex64::new(0.0, model.chi() / 4.0));
    LindbladModel::new(h, vec![a]).expect("oscillator operators are well formed")
}

/// A validated density matrix: Hermitian, unit trace, positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(rho: CMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidParameter("density matrix must be square".into()));
        }
        let asym = (&rho - rho.adjoint()).camax();
        if asym > 1e-10 {
            return Err(Error::InvalidParameter(format!("density matrix not Hermitian ({asym:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("density matrix trace {tr} != 1")));
        }
        let hermitian = (&rho + rho.adjoint()).map(|v| v * 0.5);
        let min_eig = hermitian.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min_eig });
        }
        Ok(Self(hermitian))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.vector();
        Self(v * v.adjoint())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// Population of the highest retained Fock level.
    pub fn tail(&self) -> f64 {
        let n = self.0.nrows();
        self.0[(n - 1, n - 1)].re
    }
}

/// `L ρ` for an arbitrary (not necessarily Hermitian) matrix.
pub fn lindblad_rhs(rho: &CMatrix, model: &LindbladModel) -> CMatrix {
    let mut out = model.effective.mul_left(rho);
    out += model.effective_adj.mul_right(rho);
    for (c, c_adj) in model.collapse.iter().zip(&model.collapse_adj) {
        out += c_adj.mul_right(&c.mul_left(rho));
    }
    out
}

fn rk4_density(rho: &CMatrix, k1: &CMatrix, dt: f64, model: &LindbladModel) -> CMatrix {
    let k2 = lindblad_rhs(&(rho + k1 * Complex64::new(0.5 * dt, 0.0)), model);
    let k3 = lindblad_rhs(&(rho + &k2 * Complex64::new(0.5 * dt, 0.0)), model);
    let k4 = lindblad_rhs(&(rho + &k3 * Complex64::new(dt, 0.0)), model);
    let incr = k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4;
    rho + incr * Complex64::new(dt / 6.0, 0.0)
}

/// `exp(L t) ρ` by fixed-step RK4 with step at most `dt`.
pub fn evolve_density(rho: &CMatrix, model: &LindbladModel, t: f64, dt: f64) -> Result<CMatrix> {
    if !(t >= 0.0) || !t.is_finite() || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("need t >= 0 and dt > 0, got t = {t}, dt = {dt}")));
    }
    if t == 0.0 {
        return Ok(rho.clone());
    }
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut state = rho.clone();
    for k in 0..steps {
        let k1 = lindblad_rhs(&state, model);
        state = rk4_density(&state, &k1, h, model);
        if !state.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Divergence { t: (k + 1) as f64 * h });
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    pub dt: f64,
    /// Frobenius norm of `L ρ` at which the state is accepted.
    pub tol: f64,
    pub t_max: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { dt: DENSITY_STEP, tol: 1e-10, t_max: 1e4 }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// Population of the top Fock level.
    pub tail: f64,
    /// `‖L ρ‖` at acceptance.
    pub residual: f64,
    pub truncation_warning: bool,
}

pub fn steady_state(model: &LindbladModel) -> Result<SteadyState> {
    steady_state_with(model, &SteadyStateOptions::default())
}

/// Integrates from the ground state `|0><0|` until `‖L ρ‖ < tol`.
pub fn steady_state_with(model: &LindbladModel, opts: &SteadyStateOptions) -> Result<SteadyState> {
    let n = model.dim();
    let mut rho = CMatrix::zeros(n, n);
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    let mut t = 0.0;
    let residual = loop {
        let k1 = lindblad_rhs(&rho, model);
        let residual = k1.norm();
        if residual < opts.tol {
            break residual;
        }
        if !residual.is_finite() {
            return Err(Error::Divergence { t });
        }
        if t > opts.t_max {
            return Err(Error::NoConvergence { t_cap: opts.t_max, residual });
        }
        rho = rk4_density(&rho, &k1, opts.dt, model);
        t += opts.dt;
    };
    // Renormalize away accumulated rounding before validation.
    let tr = rho.trace();
    rho /= tr;
    let rho = DensityMatrix::new(rho)?;
    let tail = rho.tail();
    if tail > TRUNCATION_ERROR_TAIL {
        return Err(Error::TruncationTail { tail });
    }
    let truncation_warning = tail >= TRUNCATION_WARNING_TAIL;
    if truncation_warning {
        log::warn!("steady-state population of |{}> is {tail:e}; consider a larger Fock basis", n - 1);
    }
    Ok(SteadyState { rho, tail, residual, truncation_warning })
}

/// `Tr[P exp(L t) P]` with `P = |ψ><ψ|`.
pub fn survival_fock(psi: &PureState, model: &LindbladModel, t: f64) -> Result<f64> {
    let v = psi.vector();
    let p = v * v.adjoint();
    let rho_t = evolve_density(&p, model, t, DENSITY_STEP)?;
    let tail = rho_t[(model.dim() - 1, model.dim() - 1)].re;
    if tail > TRUNCATION_ERROR_TAIL {
        return Err(Error::TruncationTail { tail });
    }
    Ok((v.adjoint() * rho_t * v)[(0, 0)].re)
}
