use unravel::fock::{opo_model, simulate_ensemble, FockSpace, NoiseCorrelation, PureState};
use unravel::oracle::compare_with_fock;
use unravel::{
    figure2_table, largest_eigenvalue, optimal_unraveling, realizable_region_boundary, robust_survival_time,
    stationary_covariance, stationary_covariance_for_unraveling, survival_probability,
    survival_probability_integral, survival_time, unconstrained_region_boundary, CovarianceMatrix,
    EnsembleDescriptor, Error, OpoModel, OptimizerConfig,
};

use crate::config::{positive, Flags};
use crate::error::CliError;
use crate::output::{fmt_num, CsvOut};

/// Containment slack for realizable points against `M∞ - M ⪰ 0`.
const CONTAINMENT_TOL: f64 = 1e-8;

/// Allowed disagreement between the two survival formulas.
const SURVIVAL_AGREEMENT: f64 = 1e-10;

/// Largest tolerated fraction of failed grid points in `optimize`.
const MAX_FAILURE_FRACTION: f64 = 0.05;

fn model(chi: f64) -> Result<OpoModel, CliError> {
    OpoModel::new(chi).map_err(|e| CliError::Usage(e.to_string()))
}

fn chi_in_open_unit(flags: &Flags, what: &str) -> Result<f64, CliError> {
    let chi = flags.require_chi()?;
    if chi <= 0.0 {
        return Err(CliError::Usage(format!("{what} needs 0 < chi < 1, got {chi}")));
    }
    Ok(chi)
}

pub fn region(flags: &Flags) -> Result<(), CliError> {
    let chi = flags.require_chi()?;
    let n = flags.points.unwrap_or(200);
    if n < 8 {
        return Err(CliError::Usage(format!("--points must be at least 8, got {n}")));
    }
    let m = model(chi)?;
    let realizable = realizable_region_boundary(&m, n)?;
    let unconstrained = unconstrained_region_boundary(&m, n)?;
    let m_inf = stationary_covariance(&m);
    let outside = realizable
        .iter()
        .filter(|p| m_inf.sub(&p.covariance()).min_eigenvalue() < -CONTAINMENT_TOL)
        .count();

    let mut out = CsvOut::open(flags.output.as_deref())?;
    out.header(&["curve", "beta", "gamma"])?;
    for p in &realizable {
        out.nums(Some("realizable"), &[p.beta, p.gamma])?;
    }
    for p in &unconstrained {
        out.nums(Some("unconstrained"), &[p.beta, p.gamma])?;
    }
    out.nums(Some("star"), &[0.0, 1.0 / (1.0 + chi)])?;
    out.finish()?;
    if outside > 0 {
        return Err(CliError::Numerical(format!("{outside} realizable points lie outside the unconstrained region")));
    }
    Ok(())
}

pub fn fig2(flags: &Flags) -> Result<(), CliError> {
    let lo = flags.chi_min.unwrap_or(0.01);
    let hi = flags.chi_max.unwrap_or(0.99);
    let steps = flags.chi_steps.unwrap_or(99);
    if steps == 0 {
        return Err(CliError::Usage("--chi-steps must be positive".into()));
    }
    if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
        return Err(CliError::Usage(format!("chi grid [{lo}, {hi}] must lie inside (0, 1)")));
    }
    let grid: Vec<f64> = if steps == 1 {
        vec![lo]
    } else {
        (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect()
    };
    let rows = figure2_table(&grid)?;
    let mut out = CsvOut::open(flags.output.as_deref())?;
    out.header(&["chi", "tau_R", "alpha_inf", "alpha0_R", "Lambda", "S_inf"])?;
    for r in rows {
        out.nums(None, &[r.chi, r.tau_r, r.alpha_inf, r.alpha0_r, r.lambda, r.s_inf])?;
    }
    out.finish()
}

pub fn survival(flags: &Flags) -> Result<(), CliError> {
    let chi = flags.require_chi()?;
    let m = model(chi)?;
    let u = flags.unraveling()?;
    let t_max = positive("t-max", flags.t_max.unwrap_or(20.0))?;
    let steps = flags.steps.unwrap_or(100).max(1);
    let m0 = stationary_covariance_for_unraveling(&u, &m)?;
    let lambda = largest_eigenvalue(&m);

    let mut out = CsvOut::open(flags.output.as_deref())?;
    out.header(&["t", "S_integral", "S_scalar", "Lambda"])?;
    let mut worst: f64 = 0.0;
    for k in 0..=steps {
        let t = t_max * k as f64 / steps as f64;
        let a = survival_probability_integral(&m0, &m, t)?;
        let b = survival_probability(m0.gamma, m0.beta, &m, t)?;
        worst = worst.max((a - b).abs());
        out.nums(None, &[t, a, b, lambda])?;
    }
    out.finish()?;
    if worst > SURVIVAL_AGREEMENT {
        return Err(CliError::Numerical(format!("survival formulas disagree by {worst:e}")));
    }
    Ok(())
}

pub fn tau(flags: &Flags) -> Result<(), CliError> {
    let chi = chi_in_open_unit(flags, "tau")?;
    let m = model(chi)?;
    let u = flags.unraveling()?;
    let st = survival_time(&u, &m)?;
    let tau_r = robust_survival_time(&m)?;
    let mut out = CsvOut::open(flags.output.as_deref())?;
    out.header(&["chi", "r", "h", "tau", "tau_R"])?;
    out.nums(None, &[chi, u.r(), u.h(), st.tau, tau_r])?;
    out.finish()
}

pub fn optimize(flags: &Flags) -> Result<(), CliError> {
    let chi = chi_in_open_unit(flags, "optimize")?;
    let m = model(chi)?;
    let defaults = OptimizerConfig::default();
    let config = OptimizerConfig {
        n_radii: flags.n_radii.unwrap_or(defaults.n_radii),
        n_angles: flags.n_angles.unwrap_or(defaults.n_angles),
        ..defaults
    };
    let res = optimal_unraveling(&m, &config)?;
    let tau_r = robust_survival_time(&m)?;

    let mut out = CsvOut::open(flags.output.as_deref())?;
    out.header(&["r", "h", "tau"])?;
    for p in &res.landscape {
        let tau = match &p.tau {
            Ok(t) => fmt_num(*t),
            Err(e) => {
                log::warn!("grid point u = {} + {}i failed: {e}", p.unraveling.r(), p.unraveling.h());
                "nan".into()
            }
        };
        out.row([fmt_num(p.unraveling.r()), fmt_num(p.unraveling.h()), tau])?;
    }
    out.finish()?;
    eprintln!("argmax u   = {} + {}i", fmt_num(res.best.r()), fmt_num(res.best.h()));
    eprintln!("tau(u)     = {}", fmt_num(res.survival.tau));
    eprintln!("tau_R      = {}", fmt_num(tau_r));
    eprintln!("difference = {}", fmt_num(res.survival.tau - tau_r));
    if res.failure_fraction() > MAX_FAILURE_FRACTION {
        return Err(CliError::Numerical(format!(
            "{} of {} grid points failed",
            res.failures,
            res.landscape.len()
        )));
    }
    Ok(())
}

pub fn oracle_compare(flags: &Flags) -> Result<(), CliError> {
    let chi = flags.require_chi()?;
    let dim = flags.fock_dim.unwrap_or(40);
    let report = match compare_with_fock(chi, dim) {
        Ok(r) => r,
        Err(Error::TruncationTail { tail }) => {
            return Err(CliError::OracleMismatch(format!(
                "Fock basis of size {dim} too small: top-level population {tail:e}"
            )))
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = CsvOut::open(flags.output.as_deref())?;
    out.header(&["quantity", "gaussian", "fock", "abs_diff", "threshold", "status"])?;
    for row in &report.rows {
        out.row([
            row.quantity.clone(),
            fmt_num(row.gaussian),
            fmt_num(row.fock),
            fmt_num(row.abs_diff()),
            fmt_num(row.threshold),
            if row.passed() { "pass" } else { "FAIL" }.to_string(),
        ])?;
    }
    out.finish()?;
    eprintln!("fock dim {dim}, top-level population {}", fmt_num(report.tail));
    if !report.passed() {
        let bad: Vec<&str> = report.rows.iter().filter(|r| !r.passed()).map(|r| r.quantity.as_str()).collect();
        return Err(CliError::OracleMismatch(format!("out of tolerance: {}", bad.join(", "))));
    }
    Ok(())
}

pub fn simulate(flags: &Flags) -> Result<(), CliError> {
    let chi = flags.require_chi()?;
    let m = model(chi)?;
    let u = flags.unraveling()?;
    let n_traj = flags.n_traj.unwrap_or(100);
    if n_traj < 2 {
        return Err(CliError::Usage(format!("--n-traj must be at least 2, got {n_traj}")));
    }
    let dt = positive("dt", flags.dt.unwrap_or(1e-4))?;
    let t_relax = positive("t-max", flags.t_max.unwrap_or(20.0))?;
    if dt > t_relax {
        return Err(CliError::Usage(format!("--dt {dt} exceeds --t-max {t_relax}")));
    }
    let dim = flags.fock_dim.unwrap_or(24);
    let space = FockSpace::new(dim).map_err(|e| CliError::Usage(e.to_string()))?;
    let seed = flags.seed.unwrap_or(0);
    let ensemble = EnsembleDescriptor::new(&m, &u)?;

    let lindblad = opo_model(&m, &space);
    let corr = NoiseCorrelation::single(&u);
    let stats = simulate_ensemble(&lindblad, &corr, &PureState::basis(0, dim), n_traj, t_relax, dt, seed)?;
    if stats.max_tail > 1e-8 {
        log::warn!("trajectory population of the top Fock level reached {:e}", stats.max_tail);
    }

    let n = n_traj as f64;
    let mx = stats.final_moments.iter().map(|g| g.mean.x_bar).sum::<f64>() / n;
    let my = stats.final_moments.iter().map(|g| g.mean.y_bar).sum::<f64>() / n;
    let mut s = [0.0; 3];
    for g in &stats.final_moments {
        let (dx, dy) = (g.mean.x_bar - mx, g.mean.y_bar - my);
        s[0] += dx * dx;
        s[1] += dy * dy;
        s[2] += dx * dy;
    }
    let sample = CovarianceMatrix::new(s[0] / (n - 1.0), s[1] / (n - 1.0), s[2] / (n - 1.0));
    let w = ensemble.weight_cov;

    let mut out = CsvOut::open(flags.output.as_deref())?;
    out.header(&["traj", "x_bar", "y_bar", "gamma", "alpha", "beta"])?;
    for (i, g) in stats.final_moments.iter().enumerate() {
        let label = i.to_string();
        out.nums(Some(&label), &[g.mean.x_bar, g.mean.y_bar, g.cov.gamma, g.cov.alpha, g.cov.beta])?;
    }
    out.nums(Some("summary_sample"), &[mx, my, sample.gamma, sample.alpha, sample.beta])?;
    out.nums(Some("summary_expected"), &[0.0, 0.0, w.gamma, w.alpha, w.beta])?;
    out.finish()
}
