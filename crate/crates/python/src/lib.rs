//! Python bindings for the `unravel` crate.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use unravel::fock::{opo_model, simulate_ensemble, FockSpace, NoiseCorrelation, PureState};
use unravel::{Error, OptimizerConfig};

create_exception!(unravel_py, TruncationError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::UnphysicalCovariance { .. } => PyValueError::new_err(e.to_string()),
        Error::TruncationTail { .. } => TruncationError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Symmetric 2x2 quadrature covariance `[[gamma, beta], [beta, alpha]]`.
#[pyclass(frozen, get_all, from_py_object)]
#[derive(Clone, Copy)]
pub struct Covariance {
    gamma: f64,
    alpha: f64,
    beta: f64,
}

impl From<unravel::CovarianceMatrix> for Covariance {
    fn from(m: unravel::CovarianceMatrix) -> Self {
        Self { gamma: m.gamma, alpha: m.alpha, beta: m.beta }
    }
}

impl Covariance {
    fn inner(&self) -> unravel::CovarianceMatrix {
        unravel::CovarianceMatrix::new(self.gamma, self.alpha, self.beta)
    }
}

#[pymethods]
impl Covariance {
    #[new]
    fn new(gamma: f64, alpha: f64, beta: f64) -> Self {
        Self { gamma, alpha, beta }
    }

    fn det(&self) -> f64 {
        self.inner().det()
    }

    fn eigenvalues(&self) -> (f64, f64) {
        self.inner().eigenvalues()
    }

    fn purity(&self) -> PyResult<f64> {
        unravel::purity(&self.inner()).map_err(to_py)
    }

    fn is_valid(&self, tol: Option<f64>) -> bool {
        unravel::is_valid_quantum_covariance(&self.inner(), tol.unwrap_or(1e-9))
    }

    fn __repr__(&self) -> String {
        format!("Covariance(gamma={}, alpha={}, beta={})", self.gamma, self.alpha, self.beta)
    }
}

/// Stationary ensemble of one unraveling: pure members sharing
/// `member_cov`, with means of covariance `weight_cov`.
#[pyclass(frozen, get_all)]
pub struct Ensemble {
    r: f64,
    h: f64,
    member_cov: Covariance,
    weight_cov: Covariance,
}

#[pymethods]
impl Ensemble {
    fn __repr__(&self) -> String {
        format!("Ensemble(r={}, h={})", self.r, self.h)
    }
}

/// Degenerate parametric oscillator below threshold, `|chi| < 1`.
#[pyclass(frozen)]
pub struct Opo {
    model: unravel::OpoModel,
}

fn unraveling(r: f64, h: f64) -> PyResult<unravel::UnravelingParam> {
    unravel::UnravelingParam::new(r, h).map_err(to_py)
}

#[pymethods]
impl Opo {
    #[new]
    fn new(chi: f64) -> PyResult<Self> {
        Ok(Self { model: unravel::OpoModel::new(chi).map_err(to_py)? })
    }

    #[getter]
    fn chi(&self) -> f64 {
        self.model.chi()
    }

    fn stationary_covariance(&self) -> Covariance {
        unravel::stationary_covariance(&self.model).into()
    }

    fn largest_eigenvalue(&self) -> f64 {
        unravel::largest_eigenvalue(&self.model)
    }

    /// Stationary covariance of the pure states generated by `u = r + ih`.
    #[pyo3(signature = (r=-1.0, h=0.0))]
    fn member_covariance(&self, r: f64, h: f64) -> PyResult<Covariance> {
        let u = unraveling(r, h)?;
        unravel::stationary_covariance_for_unraveling(&u, &self.model).map(Into::into).map_err(to_py)
    }

    /// The unraveling that leaves a pure covariance stationary, or `None`
    /// when it lies outside the unit disk.
    fn unraveling_for(&self, cov: Covariance) -> PyResult<Option<(f64, f64)>> {
        let sol = unravel::unraveling_for_covariance(&cov.inner(), &self.model).map_err(to_py)?;
        Ok(sol.param().map(|u| (u.r(), u.h())))
    }

    #[pyo3(signature = (r=-1.0, h=0.0))]
    fn ensemble(&self, r: f64, h: f64) -> PyResult<Ensemble> {
        let u = unraveling(r, h)?;
        let e = unravel::EnsembleDescriptor::new(&self.model, &u).map_err(to_py)?;
        Ok(Ensemble { r, h, member_cov: e.member_cov.into(), weight_cov: e.weight_cov.into() })
    }

    #[pyo3(signature = (t, r=-1.0, h=0.0))]
    fn survival_probability(&self, t: f64, r: f64, h: f64) -> PyResult<f64> {
        let u = unraveling(r, h)?;
        let m0 = unravel::stationary_covariance_for_unraveling(&u, &self.model).map_err(to_py)?;
        unravel::survival_probability(m0.gamma, m0.beta, &self.model, t).map_err(to_py)
    }

    #[pyo3(signature = (r=-1.0, h=0.0))]
    fn survival_time(&self, r: f64, h: f64) -> PyResult<f64> {
        let u = unraveling(r, h)?;
        unravel::survival_time(&u, &self.model).map(|s| s.tau).map_err(to_py)
    }

    fn robust_survival(&self, t: f64) -> PyResult<f64> {
        unravel::robust_survival(&self.model, t).map_err(to_py)
    }

    fn robust_survival_time(&self) -> PyResult<f64> {
        unravel::robust_survival_time(&self.model).map_err(to_py)
    }

    /// Returns `((r, h), tau, failures)` for the longest-surviving unraveling.
    #[pyo3(signature = (n_radii=21, n_angles=32))]
    fn optimize(&self, py: Python<'_>, n_radii: usize, n_angles: usize) -> PyResult<((f64, f64), f64, usize)> {
        let config = OptimizerConfig { n_radii, n_angles, ..OptimizerConfig::default() };
        let model = self.model;
        let res = py.detach(|| unravel::optimal_unraveling(&model, &config)).map_err(to_py)?;
        Ok(((res.best.r(), res.best.h()), res.survival.tau, res.failures))
    }

    /// Rows `(quantity, gaussian, fock, threshold)` comparing the Gaussian
    /// formulas with a Fock-basis calculation of size `fock_dim`.
    #[pyo3(signature = (fock_dim=40))]
    fn fock_compare(&self, py: Python<'_>, fock_dim: usize) -> PyResult<Vec<(String, f64, f64, f64)>> {
        let chi = self.model.chi();
        let report = py.detach(|| unravel::oracle::compare_with_fock(chi, fock_dim)).map_err(to_py)?;
        Ok(report.rows.into_iter().map(|r| (r.quantity, r.gaussian, r.fock, r.threshold)).collect())
    }

    /// Runs `n_traj` trajectories from vacuum and returns each final state's
    /// `(x_bar, y_bar, gamma, alpha, beta)`.
    #[pyo3(signature = (n_traj, t, dt=1e-4, r=-1.0, h=0.0, fock_dim=24, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn simulate(
        &self,
        py: Python<'_>,
        n_traj: usize,
        t: f64,
        dt: f64,
        r: f64,
        h: f64,
        fock_dim: usize,
        seed: u64,
    ) -> PyResult<Vec<(f64, f64, f64, f64, f64)>> {
        let u = unraveling(r, h)?;
        let space = FockSpace::new(fock_dim).map_err(to_py)?;
        let model = self.model;
        let stats = py
            .detach(|| {
                let lindblad = opo_model(&model, &space);
                let corr = NoiseCorrelation::single(&u);
                simulate_ensemble(&lindblad, &corr, &PureState::basis(0, fock_dim), n_traj, t, dt, seed)
            })
            .map_err(to_py)?;
        Ok(stats
            .final_moments
            .iter()
            .map(|g| (g.mean.x_bar, g.mean.y_bar, g.cov.gamma, g.cov.alpha, g.cov.beta))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Opo(chi={})", self.model.chi())
    }
}

/// `Tr[rho1 rho2]` for two Gaussian states given as `(mean, covariance)`.
#[pyfunction]
fn overlap(mean1: (f64, f64), cov1: Covariance, mean2: (f64, f64), cov2: Covariance) -> PyResult<f64> {
    let state = |m: (f64, f64), c: Covariance| {
        unravel::GaussianState::new(unravel::MeanVector::new(m.0, m.1), c.inner()).map_err(to_py)
    };
    unravel::gaussian_overlap(&state(mean1, cov1)?, &state(mean2, cov2)?).map_err(to_py)
}

/// Rows `(chi, tau_R, alpha_inf, alpha0_R, Lambda, S_inf)`.
#[pyfunction]
fn figure2(chi: Vec<f64>) -> PyResult<Vec<(f64, f64, f64, f64, f64, f64)>> {
    let rows = unravel::figure2_table(&chi).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.chi, r.tau_r, r.alpha_inf, r.alpha0_r, r.lambda, r.s_inf)).collect())
}

#[pymodule]
fn unravel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Covariance>()?;
    m.add_class::<Ensemble>()?;
    m.add_class::<Opo>()?;
    m.add_function(wrap_pyfunction!(overlap, m)?)?;
    m.add_function(wrap_pyfunction!(figure2, m)?)?;
    m.add("TruncationError", m.py().get_type::<TruncationError>())?;
    Ok(())
}
