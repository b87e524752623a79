//! Second-moment dynamics of the oscillator conditioned on a continuous
//! Markovian unraveling.
//!
//! An unraveling is labelled by `u = r + ih`, the correlation `dW² = u dt`
//! of the complex Wiener increment driving the stochastic Schrödinger
//! equation. Gaussian states stay Gaussian; their covariance follows a
//! deterministic Riccati-type flow and only the means are noisy.

use nalgebra::{Matrix3x2, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{stationary_covariance, CovarianceMatrix, GaussianState, OpoModel};

/// Fixed RK4 step for the covariance flow, in cavity lifetimes.
pub const COVARIANCE_STEP: f64 = 1e-3;

/// `max |dM/dt|` below which the flow is considered stationary.
pub const STATIONARITY_TOL: f64 = 1e-12;

/// Tolerance on `det(M₀) = 1` for stationary pure covariances.
pub const PURITY_TOL: f64 = 1e-6;

/// Slack on `r² + h² <= 1` when classifying an inverse solution as realizable.
pub const REALIZABLE_TOL: f64 = 1e-6;

const PSD_TOL: f64 = 1e-9;

/// Noise correlation `u = r + ih` of a diffusive unraveling, `|u| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnravelingParam {
    r: f64,
    h: f64,
}

impl UnravelingParam {
    /// The maximally robust unraveling for `0 < chi < 1`.
    pub const ROBUST: UnravelingParam = UnravelingParam { r: -1.0, h: 0.0 };

    pub fn new(r: f64, h: f64) -> Result<Self> {
        if !r.is_finite() || !h.is_finite() || r * r + h * h > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "u = {r} + {h}i lies outside the closed unit disk"
            )));
        }
        Ok(Self { r, h })
    }

    pub fn from_polar(radius: f64, angle: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&radius) {
            return Err(Error::InvalidParameter(format!("radius {radius} outside [0, 1]")));
        }
        Ok(Self { r: radius * angle.cos(), h: radius * angle.sin() })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn modulus(&self) -> f64 {
        self.r.hypot(self.h)
    }

    pub fn conj(&self) -> Self {
        Self { r: self.r, h: -self.h }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.r, self.h)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.r - other.r).hypot(self.h - other.h)
    }
}

/// Right-hand sides of the conditioned moment equations.
///
/// The means obey `dx̄ = dx_bar dt + Re{dW · noise_x}` and
/// `dȳ = dy_bar dt + Re{dW · noise_y}`; the covariance has no stochastic part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentDerivatives {
    pub dx_bar: f64,
    pub dy_bar: f64,
    pub dgamma: f64,
    pub dalpha: f64,
    pub dbeta: f64,
    pub noise_x: Complex64,
    pub noise_y: Complex64,
}

impl MomentDerivatives {
    pub fn covariance_rate(&self) -> CovarianceMatrix {
        CovarianceMatrix::new(self.dgamma, self.dalpha, self.dbeta)
    }
}

/// Covariance drift of the master equation alone.
fn unconditioned_rate(m: &CovarianceMatrix, model: &OpoModel) -> CovarianceMatrix {
    let chi = model.chi();
    CovarianceMatrix::new(
        -(1.0 + chi) * m.gamma + 1.0,
        -(1.0 - chi) * m.alpha + 1.0,
        -m.beta,
    )
}

/// Contribution of the measurement back-action `H[dW a]`.
fn unraveling_rate(m: &CovarianceMatrix, u: &UnravelingParam) -> CovarianceMatrix {
    let (r, h) = (u.r, u.h);
    let g = m.gamma - 1.0;
    let a = m.alpha - 1.0;
    let b = m.beta;
    CovarianceMatrix::new(
        0.5 * (-(1.0 + r) * g * g - (1.0 - r) * b * b + 2.0 * h * g * b),
        0.5 * (-(1.0 - r) * a * a - (1.0 + r) * b * b + 2.0 * h * a * b),
        0.5 * (-(1.0 + r) * g * b - (1.0 - r) * a * b + h * (b * b + g * a)),
    )
}

fn conditioned_rate(m: &CovarianceMatrix, u: &UnravelingParam, model: &OpoModel) -> CovarianceMatrix {
    unconditioned_rate(m, model).add(&unraveling_rate(m, u))
}

pub fn moment_derivatives(
    state: &GaussianState,
    u: &UnravelingParam,
    model: &OpoModel,
) -> MomentDerivatives {
    let m = &state.cov;
    let rate = conditioned_rate(m, u, model);
    MomentDerivatives {
        dx_bar: -model.x_decay() * state.mean.x_bar,
        dy_bar: -model.y_decay() * state.mean.y_bar,
        dgamma: rate.gamma,
        dalpha: rate.alpha,
        dbeta: rate.beta,
        noise_x: Complex64::new(m.gamma - 1.0, m.beta),
        noise_y: Complex64::new(m.beta, m.alpha - 1.0),
    }
}

/// Moment derivatives with the unraveling terms switched off: the drift of
/// the unmonitored master equation.
pub fn unconditioned_moment_derivatives(state: &GaussianState, model: &OpoModel) -> MomentDerivatives {
    let rate = unconditioned_rate(&state.cov, model);
    MomentDerivatives {
        dx_bar: -model.x_decay() * state.mean.x_bar,
        dy_bar: -model.y_decay() * state.mean.y_bar,
        dgamma: rate.gamma,
        dalpha: rate.alpha,
        dbeta: rate.beta,
        noise_x: Complex64::new(0.0, 0.0),
        noise_y: Complex64::new(0.0, 0.0),
    }
}

fn rk4_step<F>(m: &CovarianceMatrix, k1: &CovarianceMatrix, dt: f64, rate: &F) -> CovarianceMatrix
where
    F: Fn(&CovarianceMatrix) -> CovarianceMatrix,
{
    let k2 = rate(&m.add(&k1.scale(0.5 * dt)));
    let k3 = rate(&m.add(&k2.scale(0.5 * dt)));
    let k4 = rate(&m.add(&k3.scale(dt)));
    let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
    m.add(&incr.scale(dt / 6.0))
}

fn integrate_flow<F>(m0: &CovarianceMatrix, t: f64, rate: F) -> Result<CovarianceMatrix>
where
    F: Fn(&CovarianceMatrix) -> CovarianceMatrix,
{
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("duration {t} must be finite and >= 0")));
    }
    if t == 0.0 {
        return Ok(*m0);
    }
    let steps = (t / COVARIANCE_STEP).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut m = *m0;
    for k in 0..steps {
        let k1 = rate(&m);
        m = rk4_step(&m, &k1, dt, &rate);
        if !m.is_finite() {
            return Err(Error::Divergence { t: (k + 1) as f64 * dt });
        }
    }
    Ok(m)
}

/// Evolves a covariance for time `t` under the conditioned flow.
pub fn integrate_covariance(
    m0: &CovarianceMatrix,
    u: &UnravelingParam,
    model: &OpoModel,
    t: f64,
) -> Result<CovarianceMatrix> {
    integrate_flow(m0, t, |m| conditioned_rate(m, u, model))
}

/// Evolves a covariance for time `t` under the unmonitored master equation.
pub fn integrate_unconditioned_covariance(
    m0: &CovarianceMatrix,
    model: &OpoModel,
    t: f64,
) -> Result<CovarianceMatrix> {
    integrate_flow(m0, t, |m| unconditioned_rate(m, model))
}

/// Time cap for the stationary search; scales with the critical slowing
/// near threshold.
pub fn stationary_time_cap(model: &OpoModel) -> f64 {
    1e4 / (1.0 - model.chi().abs())
}

/// The attracting fixed point `M₀ᵘ` of the conditioned flow, reached by
/// integrating from the stationary covariance of the master equation.
pub fn stationary_covariance_for_unraveling(
    u: &UnravelingParam,
    model: &OpoModel,
) -> Result<CovarianceMatrix> {
    stationary_covariance_from(&stationary_covariance(model), u, model)
}

/// As [`stationary_covariance_for_unraveling`] but from an arbitrary start.
pub fn stationary_covariance_from(
    m0: &CovarianceMatrix,
    u: &UnravelingParam,
    model: &OpoModel,
) -> Result<CovarianceMatrix> {
    let rate = |m: &CovarianceMatrix| conditioned_rate(m, u, model);
    let cap = stationary_time_cap(model);
    let mut m = *m0;
    let mut t = 0.0;
    loop {
        let k1 = rate(&m);
        let residual = k1.max_abs_diff(&CovarianceMatrix::ZERO);
        if residual < STATIONARITY_TOL {
            break;
        }
        if !residual.is_finite() {
            return Err(Error::Divergence { t });
        }
        if t > cap {
            return Err(Error::NoConvergence { t_cap: cap, residual });
        }
        m = rk4_step(&m, &k1, COVARIANCE_STEP, &rate);
        t += COVARIANCE_STEP;
    }
    let det = m.det();
    if (det - 1.0).abs() > PURITY_TOL {
        return Err(Error::UnphysicalCovariance { det });
    }
    Ok(m)
}

/// Result of mapping a pure covariance back to the unraveling that leaves
/// it stationary. `(r, h)` may lie outside the unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseSolution {
    pub r: f64,
    pub h: f64,
    pub residual: f64,
    pub realizable: bool,
}

impl InverseSolution {
    pub fn modulus_squared(&self) -> f64 {
        self.r * self.r + self.h * self.h
    }

    /// The unraveling, if it is physically realizable. Solutions within
    /// [`REALIZABLE_TOL`] of the unit circle are projected onto it.
    pub fn param(&self) -> Option<UnravelingParam> {
        if !self.realizable {
            return None;
        }
        let modulus = self.r.hypot(self.h);
        let scale = if modulus > 1.0 { 1.0 / modulus } else { 1.0 };
        Some(UnravelingParam { r: self.r * scale, h: self.h * scale })
    }
}

/// Solves the three stationarity equations, which are linear in `(r, h)`,
/// by least squares.
pub fn unraveling_for_covariance(m: &CovarianceMatrix, model: &OpoModel) -> Result<InverseSolution> {
    if !m.is_finite() || m.gamma <= 0.0 || m.alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!("covariance {m:?} must have positive diagonal")));
    }
    if (m.det() - 1.0).abs() > PURITY_TOL {
        return Err(Error::UnphysicalCovariance { det: m.det() });
    }
    let g = m.gamma - 1.0;
    let a = m.alpha - 1.0;
    let b = m.beta;
    let drift = unconditioned_rate(m, model);
    // Row i: coefficient of r, coefficient of h = right-hand side.
    let lhs = Matrix3x2::new(
        0.5 * (b * b - g * g), g * b,
        0.5 * (a * a - b * b), a * b,
        0.5 * (a * b - g * b), 0.5 * (b * b + g * a),
    );
    let rhs = Vector3::new(
        -drift.gamma + 0.5 * (g * g + b * b),
        -drift.alpha + 0.5 * (a * a + b * b),
        -drift.beta + 0.5 * (g * b + a * b),
    );
    let svd = lhs.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if s_max <= 1e-12 || s_min <= 1e-10 * s_max {
        return Err(Error::Underdetermined);
    }
    let x = svd.solve(&rhs, 0.0).map_err(|_| Error::Underdetermined)?;
    let residual = (lhs * x - rhs).norm();
    if residual > 1e-8 * (1.0 + m.frobenius_norm()) {
        return Err(Error::InconsistentSystem { residual });
    }
    let (r, h) = (x[0], x[1]);
    Ok(InverseSolution { r, h, residual, realizable: r * r + h * h <= 1.0 + REALIZABLE_TOL })
}

/// A vertex of a region boundary in the `(beta, gamma)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPoint {
    pub beta: f64,
    pub gamma: f64,
}

impl RegionPoint {
    /// The pure covariance at this point.
    pub fn covariance(&self) -> CovarianceMatrix {
        CovarianceMatrix::pure(self.gamma, self.beta)
    }
}

fn check_sample_count(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 boundary samples, got {n}")));
    }
    Ok(())
}

/// Closed curve traced by `M₀ᵘ` for `u = exp(iθ)`, `θ_k = 2πk/n`.
pub fn realizable_region_boundary(model: &OpoModel, n: usize) -> Result<Vec<RegionPoint>> {
    check_sample_count(n)?;
    (0..n)
        .into_par_iter()
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let u = UnravelingParam::from_polar(1.0, theta)?;
            let m = stationary_covariance_for_unraveling(&u, model)?;
            Ok(RegionPoint { beta: m.beta, gamma: m.gamma })
        })
        .collect()
}

/// Curve `det(M∞ - M) = 0` on the pure-state surface `alpha = (beta²+1)/gamma`.
///
/// Eliminating alpha gives `beta² = (p - gamma)(q gamma - 1) / p` with
/// `M∞ = diag(p, q)`, nonnegative for `gamma` in `[1/q, p]`. The upper branch
/// is sampled on a uniform gamma grid and mirrored, giving `2⌈n/2⌉` vertices.
pub fn unconstrained_region_boundary(model: &OpoModel, n: usize) -> Result<Vec<RegionPoint>> {
    check_sample_count(n)?;
    let m_inf = stationary_covariance(model);
    let (p, q) = (m_inf.gamma, m_inf.alpha);
    let (lo, hi) = (1.0 / q, p);
    let intervals = n.div_ceil(2);
    let beta_at = |gamma: f64| -> Result<f64> {
        let beta_sq = (p - gamma) * (q * gamma - 1.0) / p;
        if beta_sq < -1e-12 {
            return Err(Error::InvalidParameter(format!(
                "no real boundary point at gamma = {gamma} (beta² = {beta_sq:e})"
            )));
        }
        Ok(beta_sq.max(0.0).sqrt())
    };
    let gammas: Vec<f64> = (0..=intervals)
        .map(|j| if j == intervals { hi } else { lo + (hi - lo) * j as f64 / intervals as f64 })
        .collect();
    let mut points = Vec::with_capacity(2 * intervals);
    for &gamma in &gammas {
        points.push(RegionPoint { beta: beta_at(gamma)?, gamma });
    }
    for &gamma in gammas[1..intervals].iter().rev() {
        points.push(RegionPoint { beta: -beta_at(gamma)?, gamma });
    }
    Ok(points)
}

/// The stationary ensemble of an unraveling: Gaussian pure states sharing
/// `member_cov`, with means distributed as a centred Gaussian of covariance
/// `weight_cov = M∞ - member_cov`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleDescriptor {
    pub member_cov: CovarianceMatrix,
    pub weight_cov: CovarianceMatrix,
    pub model: OpoModel,
    pub unraveling: UnravelingParam,
}

impl EnsembleDescriptor {
    pub fn new(model: &OpoModel, unraveling: &UnravelingParam) -> Result<Self> {
        let member_cov = stationary_covariance_for_unraveling(unraveling, model)?;
        let mut e = Self {
            member_cov,
            weight_cov: CovarianceMatrix::ZERO,
            model: *model,
            unraveling: *unraveling,
        };
        e.weight_cov = weight_covariance(&e)?;
        Ok(e)
    }
}

/// `M∞ - M₀ᵘ`, checked to be positive semidefinite.
pub fn weight_covariance(e: &EnsembleDescriptor) -> Result<CovarianceMatrix> {
    let w = stationary_covariance(&e.model).sub(&e.member_cov);
    let min_eigenvalue = w.min_eigenvalue();
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
    }
    Ok(w)
}
