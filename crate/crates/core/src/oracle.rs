//! Gaussian formulas versus the truncated Fock-basis reference.

use crate::error::Result;
use crate::fock::{
    density_moments, gaussian_pure_state, largest_density_eigenvalue, opo_model, steady_state,
    survival_fock, FockSpace, QuadratureOps,
};
use crate::gaussian::{
    gaussian_overlap, largest_eigenvalue, stationary_covariance, GaussianState, MeanVector, OpoModel,
};
use crate::robustness::evolved_moments;
use crate::unraveling::{stationary_covariance_for_unraveling, UnravelingParam};

/// Default agreement threshold for every compared quantity.
pub const ORACLE_THRESHOLD: f64 = 1e-4;

/// Times at which the single-member survival probability is compared.
pub const SURVIVAL_TIMES: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub quantity: String,
    pub gaussian: f64,
    pub fock: f64,
    pub threshold: f64,
}

impl OracleRow {
    pub fn abs_diff(&self) -> f64 {
        (self.gaussian - self.fock).abs()
    }

    pub fn passed(&self) -> bool {
        self.abs_diff() <= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub chi: f64,
    pub fock_dim: usize,
    /// Steady-state population of the top Fock level.
    pub tail: f64,
    pub truncation_warning: bool,
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(OracleRow::passed)
    }
}

/// Compares stationary moments, the largest stationary eigenvalue and the
/// survival of the maximally robust member state.
pub fn compare_with_fock(chi: f64, fock_dim: usize) -> Result<OracleReport> {
    let model = OpoModel::new(chi)?;
    let space = FockSpace::new(fock_dim)?;
    let lindblad = opo_model(&model, &space);
    let ops = QuadratureOps::new(&space);
    let ss = steady_state(&lindblad)?;
    let moments = density_moments(ss.rho.matrix(), &ops);
    let m_inf = stationary_covariance(&model);

    let mut rows = Vec::new();
    let mut push = |quantity: String, gaussian: f64, fock: f64| {
        rows.push(OracleRow { quantity, gaussian, fock, threshold: ORACLE_THRESHOLD });
    };
    push("gamma_inf".into(), m_inf.gamma, moments.cov.gamma);
    push("alpha_inf".into(), m_inf.alpha, moments.cov.alpha);
    push("beta_inf".into(), m_inf.beta, moments.cov.beta);
    push("lambda".into(), largest_eigenvalue(&model), largest_density_eigenvalue(ss.rho.matrix()));

    let m0 = stationary_covariance_for_unraveling(&UnravelingParam::ROBUST, &model)?;
    let member = GaussianState::new(MeanVector::ZERO, m0)?;
    let psi = gaussian_pure_state(&member, &space)?;
    for t in SURVIVAL_TIMES {
        let (_, m_t) = evolved_moments(&m0, &model, t)?;
        let evolved = GaussianState { mean: MeanVector::ZERO, cov: m_t };
        let gaussian = gaussian_overlap(&member, &evolved)?;
        push(format!("survival_t{t}"), gaussian, survival_fock(&psi, &lindblad, t)?);
    }
    Ok(OracleReport {
        chi,
        fock_dim,
        tail: ss.tail,
        truncation_warning: ss.truncation_warning,
        rows,
    })
}
