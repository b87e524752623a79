//! Ensemble-average survival probability and survival time of the
//! stationary ensembles, and the search for the most robust unraveling.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{largest_eigenvalue, stationary_covariance, CovarianceMatrix, OpoModel};
use crate::unraveling::{stationary_covariance_for_unraveling, UnravelingParam, PURITY_TOL};

/// Forward-scan step used to bracket the first crossing `S(t) = Λ`.
pub const SCAN_STEP: f64 = 0.01;

/// Bracket width at which bisection stops.
pub const ROOT_TOL: f64 = 1e-10;

const PSD_TOL: f64 = 1e-9;

/// Free decay of the means over time `t`: `V_t = diag(v₊, v₋)` with
/// `v± = exp(-(1 ± chi) t / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub t: f64,
    pub v_plus: f64,
    pub v_minus: f64,
}

impl Propagator {
    pub fn new(model: &OpoModel, t: f64) -> Self {
        Self {
            t,
            v_plus: (-model.x_decay() * t).exp(),
            v_minus: (-model.y_decay() * t).exp(),
        }
    }
}

/// Sampled `S(t)` for one unraveling.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub chi: f64,
    pub unraveling: UnravelingParam,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalTime {
    pub tau: f64,
    pub crossing_bracket: (f64, f64),
}

fn check_duration(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("duration {t} must be finite and >= 0")));
    }
    Ok(())
}

/// Moments of `exp(L t) P` for a Gaussian `P` with covariance `m0`:
/// `M_t = V M₀ V + M∞ - V M∞ V`. The mean maps as `μ_t = V μ`.
pub fn evolved_moments(
    m0: &CovarianceMatrix,
    model: &OpoModel,
    t: f64,
) -> Result<(Propagator, CovarianceMatrix)> {
    check_duration(t)?;
    let v = Propagator::new(model, t);
    let m_inf = stationary_covariance(model);
    let m_t = m0
        .congruence_diag(v.v_plus, v.v_minus)
        .add(&m_inf)
        .sub(&m_inf.congruence_diag(v.v_plus, v.v_minus));
    Ok((v, m_t))
}

/// `S(t)` as the Gaussian average over member means, evaluated as
/// `det(½[(1-V)(M∞-M₀)(1-V) + M_t + M₀])^(-1/2)`.
pub fn survival_probability_integral(m0: &CovarianceMatrix, model: &OpoModel, t: f64) -> Result<f64> {
    if (m0.det() - 1.0).abs() > PURITY_TOL || m0.gamma <= 0.0 {
        return Err(Error::UnphysicalCovariance { det: m0.det() });
    }
    let weight = stationary_covariance(model).sub(m0);
    let min_eigenvalue = weight.min_eigenvalue();
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
    }
    let (v, m_t) = evolved_moments(m0, model, t)?;
    let spread = weight.congruence_diag(1.0 - v.v_plus, 1.0 - v.v_minus);
    let kernel = spread.add(&m_t).add(m0).scale(0.5);
    Ok(kernel.det().powf(-0.5))
}

/// Scalar form of `S(t)` in terms of `v±`, `gamma₀` and `beta₀` alone.
/// Assumes the member covariance is pure, `alpha₀ = (beta₀² + 1) / gamma₀`.
pub fn survival_probability(gamma0: f64, beta0: f64, model: &OpoModel, t: f64) -> Result<f64> {
    if !(gamma0 > 0.0) || !gamma0.is_finite() || !beta0.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma0 = {gamma0} must be positive")));
    }
    check_duration(t)?;
    let chi = model.chi();
    let v = Propagator::new(model, t);
    let (vp, vm) = (v.v_plus, v.v_minus);
    let squeeze = vm * (1.0 - vp) / ((1.0 + chi) * gamma0);
    let bracket = vp * vm
        + squeeze
        + vp * (1.0 - vm) * gamma0 / (1.0 - chi)
        + (1.0 - vm) * (1.0 - vp) / (1.0 - chi * chi)
        + beta0 * beta0 * (squeeze - 0.25 * (vp - vm) * (vp - vm));
    Ok(bracket.powf(-0.5))
}

/// Closed-form `S(t)` of the maximally robust ensemble,
/// `sqrt((1-chi²) / (1 - chi² exp(-(1-chi) t/2)))`.
///
/// For `chi < 0` the roles of the quadratures swap and the formula holds
/// with `|chi|`.
pub fn robust_survival(model: &OpoModel, t: f64) -> Result<f64> {
    check_duration(t)?;
    let chi = model.chi().abs();
    let c2 = chi * chi;
    Ok(((1.0 - c2) / (1.0 - c2 * (-(1.0 - chi) * t / 2.0).exp())).sqrt())
}

/// Forward-scan horizon: `10 · (2/(1-|chi|)) · ln(4/(1-|chi|))`.
pub fn scan_cap(model: &OpoModel) -> f64 {
    let gap = 1.0 - model.chi().abs();
    10.0 * (2.0 / gap) * (4.0 / gap).ln()
}

/// First time the curve `s(t)` reaches `level`, by forward scan then
/// bisection.
fn first_crossing<F>(s: F, level: f64, t_max: f64) -> Result<SurvivalTime>
where
    F: Fn(f64) -> Result<f64>,
{
    let f = |t: f64| s(t).map(|v| v - level);
    let mut lo = 0.0;
    if f(lo)? <= 0.0 {
        return Ok(SurvivalTime { tau: 0.0, crossing_bracket: (0.0, 0.0) });
    }
    let mut k = 1usize;
    loop {
        let hi = k as f64 * SCAN_STEP;
        if hi > t_max {
            return Err(Error::NoCrossing { t_max });
        }
        let f_hi = f(hi)?;
        if f_hi <= 0.0 {
            let bracket = (lo, hi);
            let (mut a, mut b) = bracket;
            if f_hi == 0.0 {
                return Ok(SurvivalTime { tau: hi, crossing_bracket: bracket });
            }
            while b - a > ROOT_TOL {
                let mid = 0.5 * (a + b);
                let f_mid = f(mid)?;
                if f_mid > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(SurvivalTime { tau: 0.5 * (a + b), crossing_bracket: bracket });
        }
        lo = hi;
        k += 1;
    }
}

/// `τ = min{t : S(t) = Λ}` for an ensemble with pure member covariance `m0`.
pub fn survival_time_for_member(m0: &CovarianceMatrix, model: &OpoModel) -> Result<SurvivalTime> {
    if model.chi() == 0.0 {
        return Err(Error::Degenerate("at chi = 0 every ensemble is the vacuum and S(t) = Λ = 1".into()));
    }
    let lambda = largest_eigenvalue(model);
    first_crossing(|t| survival_probability(m0.gamma, m0.beta, model, t), lambda, scan_cap(model))
}

/// Survival time of the stationary ensemble of `u`.
pub fn survival_time(u: &UnravelingParam, model: &OpoModel) -> Result<SurvivalTime> {
    if model.chi() == 0.0 {
        return Err(Error::Degenerate("at chi = 0 every ensemble is the vacuum and S(t) = Λ = 1".into()));
    }
    let m0 = stationary_covariance_for_unraveling(u, model)?;
    survival_time_for_member(&m0, model)
}

/// Survival time of the maximally robust ensemble,
/// `(2/(1-chi)) ln[4chi² / (2 + chi² - 2 sqrt(1-chi²))]`, evaluated as
/// `(2/(1-chi)) ln[4(1+s)/(3+s)]` with `s = sqrt(1-chi²)` so that the limit
/// `2 ln 2` at `chi = 0` is reached without cancellation.
pub fn robust_survival_time(model: &OpoModel) -> Result<f64> {
    let chi = model.chi();
    if chi < 0.0 {
        return Err(Error::InvalidParameter(format!("robust survival time needs 0 <= chi < 1, got {chi}")));
    }
    let s = (1.0 - chi * chi).sqrt();
    Ok(2.0 / (1.0 - chi) * (4.0 * (1.0 + s) / (3.0 + s)).ln())
}

pub fn survival_curve(u: &UnravelingParam, model: &OpoModel, times: &[f64]) -> Result<SurvivalCurve> {
    let m0 = stationary_covariance_for_unraveling(u, model)?;
    let samples = times
        .iter()
        .map(|&t| survival_probability(m0.gamma, m0.beta, model, t).map(|s| (t, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SurvivalCurve { chi: model.chi(), unraveling: *u, samples })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Radii `k/(n_radii-1)`, `k = 0..n_radii`.
    pub n_radii: usize,
    /// Angles `2πj/n_angles`.
    pub n_angles: usize,
    /// Refinement stops once a trial move of `u` is shorter than this.
    pub min_move: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { n_radii: 21, n_angles: 32, min_move: 1e-3 }
    }
}

/// One evaluated grid point of the `τ(u)` landscape.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapePoint {
    pub unraveling: UnravelingParam,
    pub tau: Result<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best: UnravelingParam,
    pub survival: SurvivalTime,
    pub landscape: Vec<LandscapePoint>,
    pub failures: usize,
}

impl OptimizationResult {
    pub fn failure_fraction(&self) -> f64 {
        self.failures as f64 / self.landscape.len().max(1) as f64
    }
}

/// Orders candidates by `τ`, breaking exact ties toward the lexicographically
/// smaller `(r, h)`.
fn better(a: (&UnravelingParam, f64), b: (&UnravelingParam, f64)) -> bool {
    match a.1.total_cmp(&b.1) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a.0.r(), a.0.h()) < (b.0.r(), b.0.h()),
    }
}

/// Maximizes `τᵘ` over the closed unit disk: polar grid, then coordinate
/// descent in `(|u|, arg u)`.
pub fn optimal_unraveling(model: &OpoModel, config: &OptimizerConfig) -> Result<OptimizationResult> {
    let chi = model.chi();
    if !(chi > 0.0) {
        return Err(Error::InvalidParameter(format!("optimization needs 0 < chi < 1, got {chi}")));
    }
    if config.n_radii < 2 || config.n_angles < 1 {
        return Err(Error::InvalidParameter("optimizer grid needs >= 2 radii and >= 1 angle".into()));
    }
    let mut grid = Vec::with_capacity(config.n_radii * config.n_angles);
    for i in 0..config.n_radii {
        let radius = i as f64 / (config.n_radii - 1) as f64;
        let n_angles = if i == 0 { 1 } else { config.n_angles };
        for j in 0..n_angles {
            let angle = std::f64::consts::TAU * j as f64 / config.n_angles as f64;
            grid.push((radius, angle, UnravelingParam::from_polar(radius, angle)?));
        }
    }
    let landscape: Vec<LandscapePoint> = grid
        .par_iter()
        .map(|(_, _, u)| LandscapePoint { unraveling: *u, tau: survival_time(u, model).map(|s| s.tau) })
        .collect();
    let failures = landscape.iter().filter(|p| p.tau.is_err()).count();
    for p in landscape.iter().filter(|p| p.tau.is_err()) {
        log::warn!("tau evaluation failed at u = {:?}: {:?}", p.unraveling, p.tau);
    }

    let mut best: Option<(usize, f64)> = None;
    for (idx, p) in landscape.iter().enumerate() {
        if let Ok(tau) = p.tau {
            let replace = match best {
                None => true,
                Some((b, tb)) => better((&p.unraveling, tau), (&landscape[b].unraveling, tb)),
            };
            if replace {
                best = Some((idx, tau));
            }
        }
    }
    let (idx, mut best_tau) = best.ok_or(Error::NoConvergence { t_cap: f64::NAN, residual: f64::NAN })?;
    let (mut radius, mut angle, mut best_u) = grid[idx];

    let mut d_radius = 1.0 / (config.n_radii - 1) as f64;
    let mut d_angle = std::f64::consts::TAU / config.n_angles as f64;
    let eval = |radius: f64, angle: f64| -> Option<(UnravelingParam, f64)> {
        let u = UnravelingParam::from_polar(radius, angle).ok()?;
        survival_time(&u, model).ok().map(|s| (u, s.tau))
    };
    for _ in 0..400 {
        let radial_move = d_radius;
        let angular_move = radius * d_angle;
        if radial_move < config.min_move && angular_move < config.min_move {
            break;
        }
        let mut improved = false;
        let mut trials = Vec::with_capacity(4);
        for s in [1.0, -1.0] {
            let r_new = (radius + s * d_radius).clamp(0.0, 1.0);
            if r_new != radius {
                trials.push((r_new, angle));
            }
        }
        if radius > 0.0 {
            for s in [1.0, -1.0] {
                trials.push((radius, angle + s * d_angle));
            }
        }
        for (r_new, a_new) in trials {
            if let Some((u, tau)) = eval(r_new, a_new) {
                if better((&u, tau), (&best_u, best_tau)) && tau > best_tau {
                    radius = r_new;
                    angle = a_new;
                    best_u = u;
                    best_tau = tau;
                    improved = true;
                }
            }
        }
        if !improved {
            d_radius *= 0.5;
            d_angle *= 0.5;
        }
    }
    let survival = survival_time(&best_u, model)?;
    Ok(OptimizationResult { best: best_u, survival, landscape, failures })
}

/// One row of the survival-time summary versus `chi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig2Row {
    pub chi: f64,
    pub tau_r: f64,
    pub alpha_inf: f64,
    pub alpha0_r: f64,
    pub lambda: f64,
    pub s_inf: f64,
}

pub fn figure2_table(chi_grid: &[f64]) -> Result<Vec<Fig2Row>> {
    chi_grid
        .iter()
        .map(|&chi| {
            if !(0.0..1.0).contains(&chi) {
                return Err(Error::InvalidParameter(format!("chi = {chi} outside [0, 1)")));
            }
            let model = OpoModel::new(chi)?;
            Ok(Fig2Row {
                chi,
                tau_r: robust_survival_time(&model)?,
                alpha_inf: 1.0 / (1.0 - chi),
                alpha0_r: 1.0 + chi,
                lambda: largest_eigenvalue(&model),
                s_inf: (1.0 - chi * chi).sqrt(),
            })
        })
        .collect()
}
