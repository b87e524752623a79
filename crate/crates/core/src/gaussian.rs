//! Single-mode Gaussian state arithmetic in the quadrature convention
//! `x = a + a†`, `y = -i a + i a†` (vacuum variance 1 in both quadratures).

use crate::error::{Error, Result};

/// Default tolerance on `det(M) >= 1`.
pub const DEFAULT_VALIDITY_TOL: f64 = 1e-9;

/// Coefficient of the quadratic form in the mean-displacement exponent of
/// [`gaussian_overlap`]. Frozen after calibration against the Fock-basis
/// trace `Tr[ρ₁ρ₂]` (see `fock` tests).
pub const OVERLAP_EXPONENT_PREFACTOR: f64 = 0.5;

/// Degenerate parametric oscillator with threshold parameter `chi`.
/// Time is measured in cavity lifetimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpoModel {
    chi: f64,
}

impl OpoModel {
    /// Rejects `|chi| >= 1` (at or above threshold) and non-finite values.
    pub fn new(chi: f64) -> Result<Self> {
        if !chi.is_finite() || chi.abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "chi = {chi} is outside the below-threshold range (-1, 1)"
            )));
        }
        Ok(Self { chi })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Damping rate of the x quadrature mean, `(1 + chi) / 2`.
    pub fn x_decay(&self) -> f64 {
        0.5 * (1.0 + self.chi)
    }

    /// Damping rate of the y quadrature mean, `(1 - chi) / 2`.
    pub fn y_decay(&self) -> f64 {
        0.5 * (1.0 - self.chi)
    }

    pub fn stationary_covariance(&self) -> CovarianceMatrix {
        stationary_covariance(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanVector {
    pub x_bar: f64,
    pub y_bar: f64,
}

impl MeanVector {
    pub const ZERO: MeanVector = MeanVector { x_bar: 0.0, y_bar: 0.0 };

    pub fn new(x_bar: f64, y_bar: f64) -> Self {
        Self { x_bar, y_bar }
    }

    pub fn norm(&self) -> f64 {
        self.x_bar.hypot(self.y_bar)
    }
}

/// Symmetric 2×2 matrix `[[gamma, beta], [beta, alpha]]`.
///
/// Used both for quantum covariances (`gamma = <x²>`, `alpha = <y²>`,
/// `beta = <xy + yx>/2`, all centred) and for classical covariances such as
/// the weight distribution of an ensemble, so the constructor does not
/// enforce `det >= 1`; see [`is_valid_quantum_covariance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CovarianceMatrix {
    pub const IDENTITY: CovarianceMatrix = CovarianceMatrix { gamma: 1.0, alpha: 1.0, beta: 0.0 };
    pub const ZERO: CovarianceMatrix = CovarianceMatrix { gamma: 0.0, alpha: 0.0, beta: 0.0 };

    pub fn new(gamma: f64, alpha: f64, beta: f64) -> Self {
        Self { gamma, alpha, beta }
    }

    pub fn diag(gamma: f64, alpha: f64) -> Self {
        Self { gamma, alpha, beta: 0.0 }
    }

    /// Pure-state covariance with `alpha = (beta² + 1) / gamma`.
    pub fn pure(gamma: f64, beta: f64) -> Self {
        Self { gamma, alpha: (beta * beta + 1.0) / gamma, beta }
    }

    pub fn det(&self) -> f64 {
        self.gamma * self.alpha - self.beta * self.beta
    }

    pub fn trace(&self) -> f64 {
        self.gamma + self.alpha
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.gamma + other.gamma, self.alpha + other.alpha, self.beta + other.beta)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.gamma - other.gamma, self.alpha - other.alpha, self.beta - other.beta)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.gamma, s * self.alpha, s * self.beta)
    }

    /// `D M D` for the diagonal matrix `D = diag(dx, dy)`.
    pub fn congruence_diag(&self, dx: f64, dy: f64) -> Self {
        Self::new(dx * dx * self.gamma, dy * dy * self.alpha, dx * dy * self.beta)
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Self::new(self.alpha / d, self.gamma / d, -self.beta / d))
    }

    /// `vᵀ M v`.
    pub fn quadratic_form(&self, v: &MeanVector) -> f64 {
        self.gamma * v.x_bar * v.x_bar
            + 2.0 * self.beta * v.x_bar * v.y_bar
            + self.alpha * v.y_bar * v.y_bar
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.gamma + self.alpha);
        let half_gap = (0.5 * (self.gamma - self.alpha)).hypot(self.beta);
        (mean - half_gap, mean + half_gap)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.gamma - other.gamma)
            .abs()
            .max((self.alpha - other.alpha).abs())
            .max((self.beta - other.beta).abs())
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.gamma * self.gamma + self.alpha * self.alpha + 2.0 * self.beta * self.beta).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.gamma.is_finite() && self.alpha.is_finite() && self.beta.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub mean: MeanVector,
    pub cov: CovarianceMatrix,
}

impl GaussianState {
    pub fn new(mean: MeanVector, cov: CovarianceMatrix) -> Result<Self> {
        check_quantum_covariance(&cov, DEFAULT_VALIDITY_TOL)?;
        if !mean.x_bar.is_finite() || !mean.y_bar.is_finite() {
            return Err(Error::InvalidParameter("mean vector must be finite".into()));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum() -> Self {
        Self { mean: MeanVector::ZERO, cov: CovarianceMatrix::IDENTITY }
    }
}

/// Covariance of the unique stationary state, `diag[(1+chi)⁻¹, (1-chi)⁻¹]`.
/// The stationary mean is zero.
pub fn stationary_covariance(model: &OpoModel) -> CovarianceMatrix {
    let chi = model.chi();
    CovarianceMatrix::diag(1.0 / (1.0 + chi), 1.0 / (1.0 - chi))
}

/// `Tr[ρ²] = det(M)^(-1/2)`.
pub fn purity(cov: &CovarianceMatrix) -> Result<f64> {
    let det = check_quantum_covariance(cov, DEFAULT_VALIDITY_TOL)?;
    Ok(det.max(1.0).powf(-0.5))
}

/// Largest eigenvalue of the stationary state, `2 [1 + (1-chi²)^(-1/2)]⁻¹`.
pub fn largest_eigenvalue(model: &OpoModel) -> f64 {
    let s = (1.0 - model.chi() * model.chi()).sqrt();
    2.0 * s / (s + 1.0)
}

/// `Tr[ρ₁ρ₂]` for two Gaussian states:
/// `2 det(M₁+M₂)^(-1/2) exp(-½ δμᵀ (M₁+M₂)⁻¹ δμ)`.
pub fn gaussian_overlap(s1: &GaussianState, s2: &GaussianState) -> Result<f64> {
    check_quantum_covariance(&s1.cov, DEFAULT_VALIDITY_TOL)?;
    check_quantum_covariance(&s2.cov, DEFAULT_VALIDITY_TOL)?;
    let sum = s1.cov.add(&s2.cov);
    // Both summands are positive definite with det >= 1, so det(sum) >= 4.
    let inv = sum.inverse().expect("sum of valid covariances is invertible");
    let delta = MeanVector::new(s1.mean.x_bar - s2.mean.x_bar, s1.mean.y_bar - s2.mean.y_bar);
    let exponent = OVERLAP_EXPONENT_PREFACTOR * inv.quadratic_form(&delta);
    Ok((2.0 / sum.det().sqrt() * (-exponent).exp()).min(1.0))
}

/// True iff `gamma > 0`, `alpha > 0` and `det >= 1 - tol`.
pub fn is_valid_quantum_covariance(cov: &CovarianceMatrix, tol: f64) -> bool {
    cov.is_finite() && cov.gamma > 0.0 && cov.alpha > 0.0 && cov.det() >= 1.0 - tol
}

/// Returns the determinant when `cov` is a valid quantum covariance.
pub(crate) fn check_quantum_covariance(cov: &CovarianceMatrix, tol: f64) -> Result<f64> {
    if !cov.is_finite() || cov.gamma <= 0.0 || cov.alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "covariance {cov:?} must be finite with positive diagonal"
        )));
    }
    let det = cov.det();
    if det < 1.0 - tol {
        return Err(Error::UnphysicalCovariance { det });
    }
    Ok(det)
}
