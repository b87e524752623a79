use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::sparse::SparseOp;
use super::{CMatrix, FockSpace};
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, GaussianState, MeanVector};

/// Normalized state vector in a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(DVector<Complex64>);

impl PureState {
    pub fn new(v: DVector<Complex64>) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("state norm {norm} != 1")));
        }
        Ok(Self(v))
    }

    pub fn normalized(v: DVector<Complex64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::NormCollapse { norm });
        }
        Ok(Self(v / Complex64::new(norm, 0.0)))
    }

    /// `|n>` in a basis of dimension `dim`.
    pub fn basis(n: usize, dim: usize) -> Self {
        assert!(n < dim, "level {n} outside basis of size {dim}");
        let mut v = DVector::zeros(dim);
        v[n] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn vector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<Complex64> {
        self.0
    }

    pub fn overlap(&self, other: &PureState) -> Complex64 {
        self.0.dotc(&other.0)
    }
}

/// Quadrature operators `x = a + a†`, `y = i(a† - a)` and their products.
#[derive(Debug, Clone)]
pub struct QuadratureOps {
    pub x: CMatrix,
    pub y: CMatrix,
    xx: CMatrix,
    yy: CMatrix,
    xy_sym: CMatrix,
    pub(crate) x_sparse: SparseOp,
    pub(crate) y_sparse: SparseOp,
}

impl QuadratureOps {
    pub fn new(space: &FockSpace) -> Self {
        let a = space.annihilation();
        let ad = a.adjoint();
        let x = &a + &ad;
        let y = (&ad - &a) * Complex64::new(0.0, 1.0);
        let xy = &x * &y;
        let yx = &y * &x;
        Self {
            xx: &x * &x,
            yy: &y * &y,
            xy_sym: (xy + yx) * Complex64::new(0.5, 0.0),
            x_sparse: SparseOp::from_dense(&x),
            y_sparse: SparseOp::from_dense(&y),
            x,
            y,
        }
    }
}

fn trace_product(a: &CMatrix, rho: &CMatrix) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * rho[(j, i)];
        }
    }
    acc.re
}

/// First and second quadrature moments of a density matrix.
pub fn density_moments(rho: &CMatrix, ops: &QuadratureOps) -> GaussianState {
    let x_bar = trace_product(&ops.x, rho);
    let y_bar = trace_product(&ops.y, rho);
    let cov = CovarianceMatrix::new(
        trace_product(&ops.xx, rho) - x_bar * x_bar,
        trace_product(&ops.yy, rho) - y_bar * y_bar,
        trace_product(&ops.xy_sym, rho) - x_bar * y_bar,
    );
    GaussianState { mean: MeanVector::new(x_bar, y_bar), cov }
}

/// First and second quadrature moments of a pure state.
pub fn pure_moments(psi: &PureState, ops: &QuadratureOps) -> GaussianState {
    let v = psi.vector().as_slice();
    let n = v.len();
    let mut xv = vec![Complex64::new(0.0, 0.0); n];
    let mut yv = vec![Complex64::new(0.0, 0.0); n];
    ops.x_sparse.apply(v, &mut xv);
    ops.y_sparse.apply(v, &mut yv);
    let mut x_bar = 0.0;
    let mut y_bar = 0.0;
    let mut xx = 0.0;
    let mut yy = 0.0;
    let mut xy = 0.0;
    for k in 0..n {
        x_bar += (v[k].conj() * xv[k]).re;
        y_bar += (v[k].conj() * yv[k]).re;
        xx += xv[k].norm_sqr();
        yy += yv[k].norm_sqr();
        xy += (xv[k].conj() * yv[k]).re;
    }
    GaussianState {
        mean: MeanVector::new(x_bar, y_bar),
        cov: CovarianceMatrix::new(xx - x_bar * x_bar, yy - y_bar * y_bar, xy - x_bar * y_bar),
    }
}

/// The pure Gaussian state with the given moments, as the null vector of
/// `B = α(x - x̄) - (β - i)(y - ȳ)`.
pub fn gaussian_pure_state(state: &GaussianState, space: &FockSpace) -> Result<PureState> {
    let cov = &state.cov;
    let det = cov.det();
    if (det - 1.0).abs() > 1e-6 || !(cov.alpha > 0.0) {
        return Err(Error::UnphysicalCovariance { det });
    }
    let (alpha, beta) = (cov.alpha, cov.beta);
    let a = space.annihilation();
    let ad = a.adjoint();
    let shift = Complex64::new(alpha * state.mean.x_bar - beta * state.mean.y_bar, state.mean.y_bar);
    let b = a * Complex64::new(alpha + 1.0, beta) + ad * Complex64::new(alpha - 1.0, -beta)
        - CMatrix::identity(space.dim(), space.dim()) * shift;
    let gram = b.adjoint() * b;
    let eig = SymmetricEigen::new(gram);
    let idx = eig.eigenvalues.imin();
    let mut v = eig.eigenvectors.column(idx).clone_owned();
    let tail = v[space.dim() - 1].norm_sqr();
    if tail > 1e-8 {
        return Err(Error::TruncationTail { tail });
    }
    // Fix the global phase on the largest component.
    let k = v.icamax();
    let phase = v[k] / Complex64::new(v[k].norm(), 0.0);
    v /= phase;
    PureState::normalized(v)
}

pub fn largest_density_eigenvalue(rho: &CMatrix) -> f64 {
    let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().max()
}
