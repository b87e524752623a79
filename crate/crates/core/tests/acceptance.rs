//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a nonzero status if any criterion fails.

use std::f64::consts::{LN_2, PI};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unravel::fock::{
    gaussian_pure_state, lindblad_rhs, opo_model, sample_noise, simulate_ensemble, sse_step, CMatrix,
    FockSpace, NoiseCorrelation, PureState,
};
use unravel::oracle::compare_with_fock;
use unravel::robustness::LandscapePoint;
use unravel::{
    largest_eigenvalue, optimal_unraveling, realizable_region_boundary, robust_survival,
    robust_survival_time, stationary_covariance, stationary_covariance_for_unraveling, survival_probability,
    survival_probability_integral, survival_time, unconstrained_region_boundary, unraveling_for_covariance,
    CovarianceMatrix, EnsembleDescriptor, GaussianState, MeanVector, OpoModel, OptimizerConfig, Result,
    UnravelingParam,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn model(chi: f64) -> OpoModel {
    OpoModel::new(chi).unwrap()
}

fn disk_grid() -> Vec<UnravelingParam> {
    let mut grid = Vec::with_capacity(100);
    for i in 1..=10 {
        let radius = i as f64 / 10.0;
        for j in 0..10 {
            grid.push(UnravelingParam::from_polar(radius, 2.0 * PI * j as f64 / 10.0).unwrap());
        }
    }
    grid
}

fn stationary_state() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for chi in [0.3, 0.5, 0.9] {
        let m = stationary_covariance_for_unraveling(&UnravelingParam::ROBUST, &model(chi))?;
        let expected = CovarianceMatrix::diag(1.0 / (1.0 + chi), 1.0 + chi);
        worst = worst.max(m.max_abs_diff(&expected));
    }
    outcome(worst <= 1e-8, format!("max |M - diag(1/(1+chi), 1+chi)| = {worst:.3e} (tol 1e-8)"))
}

fn purity_of_realizable_ensembles() -> Result<Outcome> {
    let m = model(0.9);
    let mut worst: f64 = 0.0;
    for u in disk_grid() {
        let cov = stationary_covariance_for_unraveling(&u, &m)?;
        worst = worst.max((cov.det() - 1.0).abs());
    }
    outcome(worst <= 1e-6, format!("max |det M - 1| over 100 disk points = {worst:.3e} (tol 1e-6)"))
}

fn inverse_round_trip() -> Result<Outcome> {
    let m = model(0.9);
    let mut worst: f64 = 0.0;
    for u in disk_grid() {
        let cov = stationary_covariance_for_unraveling(&u, &m)?;
        let sol = unraveling_for_covariance(&cov, &m)?;
        let dist = match sol.param() {
            Some(back) => back.distance(&u),
            None => f64::INFINITY,
        };
        worst = worst.max(dist);
    }
    outcome(worst <= 1e-6, format!("max |u - u'| over 100 disk points = {worst:.3e} (tol 1e-6)"))
}

fn survival_formula_equivalence() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for chi in [0.3, 0.9] {
        let m = model(chi);
        let horizon = 3.0 * robust_survival_time(&m)?;
        for radius in [0.25, 0.5, 0.75, 1.0] {
            for j in 0..5 {
                let u = UnravelingParam::from_polar(radius, 2.0 * PI * j as f64 / 5.0 + 0.3)?;
                let m0 = stationary_covariance_for_unraveling(&u, &m)?;
                for k in 0..20 {
                    let t = horizon * k as f64 / 19.0;
                    let a = survival_probability_integral(&m0, &m, t)?;
                    let b = survival_probability(m0.gamma, m0.beta, &m, t)?;
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |S_det - S_scalar| over 2 x 20 x 20 grid = {worst:.3e} (tol 1e-10)"))
}

fn limit_value() -> Result<Outcome> {
    let target = 2.0 * LN_2;
    let closed = robust_survival_time(&model(1e-6))?;
    let numeric = survival_time(&UnravelingParam::ROBUST, &model(0.01))?.tau;
    let d_closed = (closed - target).abs();
    let d_numeric = (numeric - target).abs();
    outcome(
        d_closed <= 1e-6 && d_numeric <= 1e-3,
        format!(
            "|tau_R(1e-6) - 2 ln 2| = {d_closed:.3e} (tol 1e-6), |tau(0.01) - 2 ln 2| = {d_numeric:.3e} (tol 1e-3); \
             tau_R = 2 ln 2 (1 + chi) + O(chi^2) near 0"
        ),
    )
}

fn optimality() -> Result<Outcome> {
    let config = OptimizerConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for chi in [0.1, 0.5, 0.9] {
        let m = model(chi);
        let tau_r = robust_survival_time(&m)?;
        let res = optimal_unraveling(&m, &config)?;
        let dist = res.best.distance(&UnravelingParam::ROBUST);
        let excess = res
            .landscape
            .iter()
            .filter_map(|p: &LandscapePoint| p.tau.as_ref().ok().copied())
            .map(|tau| tau - tau_r)
            .fold(f64::NEG_INFINITY, f64::max);
        let ok = dist <= 1e-2 && excess <= 1e-8 && res.failures == 0;
        pass &= ok;
        parts.push(format!(
            "chi {chi}: |u* + 1| = {dist:.2e}, max(tau - tau_R) = {excess:.2e}, failures {}",
            res.failures
        ));
    }
    outcome(pass, parts.join("; "))
}

fn crossing_identity() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for k in 1..=9 {
        let chi = k as f64 / 10.0;
        let m = model(chi);
        let tau = robust_survival_time(&m)?;
        let lambda = largest_eigenvalue(&m);
        let member = CovarianceMatrix::diag(1.0 / (1.0 + chi), 1.0 + chi);
        worst = worst
            .max((robust_survival(&m, tau)? - lambda).abs())
            .max((survival_probability_integral(&member, &m, tau)? - lambda).abs());
    }
    outcome(worst <= 1e-9, format!("max |S_R(tau_R) - Lambda| over chi = 0.1..0.9 = {worst:.3e} (tol 1e-9)"))
}

fn critical_slowing() -> Result<Outcome> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for k in 0..=99 {
        let chi = 0.9 + 0.099 * k as f64 / 99.0;
        let scaled = (1.0 - chi) * robust_survival_time(&model(chi))?;
        if !scaled.is_finite() {
            return outcome(false, format!("(1-chi) tau_R not finite at chi = {chi}"));
        }
        lo = lo.min(scaled);
        hi = hi.max(scaled);
    }
    outcome(lo > 0.0 && hi < 2.0 * LN_2, format!("(1-chi) tau_R on [0.9, 0.999] spans [{lo:.6}, {hi:.6}]"))
}

fn fock_oracle() -> Result<Outcome> {
    let report = compare_with_fock(0.5, 40)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for row in &report.rows {
        let tol = if row.quantity.ends_with("_inf") { 1e-6 } else { 1e-4 };
        pass &= row.abs_diff() <= tol;
        parts.push(format!("{} {:.2e}", row.quantity, row.abs_diff()));
    }
    outcome(pass, format!("N = 40, tail {:.1e}; |diff|: {}", report.tail, parts.join(", ")))
}

fn ito_contracts() -> Result<Outcome> {
    // Mean contract at a fixed displaced squeezed state.
    let chi = 0.5;
    let m = model(chi);
    let dim = 30;
    let space = FockSpace::new(dim)?;
    let lindblad = opo_model(&m, &space);
    let u = UnravelingParam::new(0.3, 0.4)?;
    let corr = NoiseCorrelation::single(&u);
    let member = GaussianState::new(MeanVector::new(0.4, -0.6), CovarianceMatrix::pure(0.8, 0.25))?;
    let psi = gaussian_pure_state(&member, &space)?;
    let p = psi.vector() * psi.vector().adjoint();
    let dt = 1e-3;
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut sum = CMatrix::zeros(dim, dim);
    let mut sum_sq_re = DMatrix::<f64>::zeros(dim, dim);
    let mut sum_sq_im = DMatrix::<f64>::zeros(dim, dim);
    for _ in 0..n {
        let next = sse_step(&psi, &lindblad, &corr, dt, &mut rng)?;
        let dp = next.vector() * next.vector().adjoint() - &p;
        sum_sq_re += dp.map(|v| v.re * v.re);
        sum_sq_im += dp.map(|v| v.im * v.im);
        sum += dp;
    }
    let nf = n as f64;
    let expected = lindblad_rhs(&p, &lindblad) * Complex64::new(dt, 0.0);
    let mut worst_z: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mean = sum[(i, j)] / nf;
            let se_re = ((sum_sq_re[(i, j)] / nf - mean.re * mean.re).max(0.0) / (nf - 1.0)).sqrt();
            let se_im = ((sum_sq_im[(i, j)] / nf - mean.im * mean.im).max(0.0) / (nf - 1.0)).sqrt();
            let d = mean - expected[(i, j)];
            for (dev, se) in [(d.re, se_re), (d.im, se_im)] {
                if se > 1e-15 {
                    worst_z = worst_z.max(dev.abs() / se);
                } else if dev.abs() > 1e-12 {
                    worst_z = f64::INFINITY;
                }
            }
        }
    }

    // Increment moments for u = 0.3 + 0.4i at dt = 1.
    let samples = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut sxx, mut syy, mut sxy, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let w = sample_noise(&corr, 1.0, &mut rng)[0];
        sx += w.re;
        sy += w.im;
        sxx += w.re * w.re;
        syy += w.im * w.im;
        sxy += w.re * w.im;
    }
    let ns = samples as f64;
    let (mx, my) = (sx / ns, sy / ns);
    let vxx = sxx / ns - mx * mx;
    let vyy = syy / ns - my * my;
    let vxy = sxy / ns - mx * my;
    let (exx, eyy, exy) = (0.65, 0.35, 0.2);
    let z_xx = (vxx - exx).abs() / (2f64.sqrt() * exx / ns.sqrt());
    let z_yy = (vyy - eyy).abs() / (2f64.sqrt() * eyy / ns.sqrt());
    let z_xy = (vxy - exy).abs() / ((exx * eyy + exy * exy) / ns).sqrt();
    let noise_z = z_xx.max(z_yy).max(z_xy);
    outcome(
        worst_z <= 5.0 && noise_z <= 5.0,
        format!(
            "E[dP] vs L(P) dt: max z = {worst_z:.2} over {} entries; noise (0.65, 0.35, 0.2) vs ({vxx:.4}, {vyy:.4}, {vxy:.4}), max z = {noise_z:.2}",
            2 * dim * dim
        ),
    )
}

fn trajectory_ensemble() -> Result<Outcome> {
    let chi = 0.5;
    let m = model(chi);
    let dim = 24;
    let space = FockSpace::new(dim)?;
    let lindblad = opo_model(&m, &space);
    let corr = NoiseCorrelation::single(&UnravelingParam::ROBUST);
    let n = 500;
    let stats = simulate_ensemble(&lindblad, &corr, &PureState::basis(0, dim), n, 20.0, 1e-4, 1)?;
    let member = CovarianceMatrix::diag(2.0 / 3.0, 1.5);
    let mut worst_member: f64 = 0.0;
    for g in &stats.final_moments {
        worst_member = worst_member.max((g.cov.gamma - member.gamma).abs()).max(g.cov.beta.abs());
    }
    let nf = n as f64;
    let mx = stats.final_moments.iter().map(|g| g.mean.x_bar).sum::<f64>() / nf;
    let my = stats.final_moments.iter().map(|g| g.mean.y_bar).sum::<f64>() / nf;
    let mut s = [0.0; 3];
    for g in &stats.final_moments {
        let dx = g.mean.x_bar - mx;
        let dy = g.mean.y_bar - my;
        s[0] += dx * dx;
        s[1] += dy * dy;
        s[2] += dx * dy;
    }
    let sample = CovarianceMatrix::new(s[0] / (nf - 1.0), s[1] / (nf - 1.0), s[2] / (nf - 1.0));
    let w = EnsembleDescriptor::new(&m, &UnravelingParam::ROBUST)?.weight_cov;
    // Standard errors of a Gaussian sample covariance, floored at rounding level.
    let floor = 1e-9;
    let se = [
        (2.0 / (nf - 1.0)).sqrt() * w.gamma,
        (2.0 / (nf - 1.0)).sqrt() * w.alpha,
        ((w.gamma * w.alpha + w.beta * w.beta) / (nf - 1.0)).sqrt(),
    ]
    .map(|v| v.max(floor));
    let dev = [sample.gamma - w.gamma, sample.alpha - w.alpha, sample.beta - w.beta];
    let z = dev.iter().zip(se).map(|(d, s)| d.abs() / s).fold(0.0, f64::max);
    outcome(
        worst_member <= 2e-2 && z <= 3.0,
        format!(
            "max |(gamma, beta) - (2/3, 0)| = {worst_member:.2e} (tol 2e-2); mean covariance \
             ({:.4}, {:.4}, {:.4}) vs ({:.4}, {:.4}, {:.4}), max z = {z:.2} (tol 3)",
            sample.gamma, sample.alpha, sample.beta, w.gamma, w.alpha, w.beta
        ),
    )
}

fn region_geometry() -> Result<Outcome> {
    let chi = 0.9;
    let m = model(chi);
    let m_inf = stationary_covariance(&m);
    let realizable = realizable_region_boundary(&m, 400)?;
    let star = (0.0, 1.0 / (1.0 + chi));
    let star_dist = realizable
        .iter()
        .map(|p| ((p.beta - star.0).powi(2) + (p.gamma - star.1).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min);
    let min_det = realizable
        .iter()
        .map(|p| m_inf.sub(&p.covariance()).det())
        .fold(f64::INFINITY, f64::min);
    let unconstrained = unconstrained_region_boundary(&m, 400)?;
    let on_axis: Vec<f64> = unconstrained.iter().filter(|p| p.beta.abs() < 1e-12).map(|p| p.gamma).collect();
    let hits = |g: f64| on_axis.iter().any(|&v| (v - g).abs() < 1e-10);
    let axis_ok = hits(1.0 - chi) && hits(1.0 / (1.0 + chi));
    outcome(
        star_dist <= 1e-4 && min_det >= -1e-8 && axis_ok,
        format!(
            "star distance {star_dist:.2e} (tol 1e-4), min det(M_inf - M) = {min_det:.2e} (tol -1e-8), \
             unconstrained beta = 0 crossings at gamma = {on_axis:?}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 12] = [
        ("stationary state at u = -1", stationary_state),
        ("purity of realizable ensembles", purity_of_realizable_ensembles),
        ("inverse-map round trip", inverse_round_trip),
        ("survival-formula equivalence", survival_formula_equivalence),
        ("small-chi limit of tau_R", limit_value),
        ("optimality of u = -1", optimality),
        ("crossing identity", crossing_identity),
        ("critical slowing", critical_slowing),
        ("Fock oracle agreement", fock_oracle),
        ("Ito contracts", ito_contracts),
        ("trajectory ensemble", trajectory_ensemble),
        ("region geometry", region_geometry),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        if !pass {
            failed += 1;
        }
        println!("criterion {id:>2} {} {name}: {detail} [{secs:.1}s]", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
