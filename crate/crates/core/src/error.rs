use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unphysical covariance: det = {det} < 1")]
    UnphysicalCovariance { det: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("integrator diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("no stationary point reached before t = {t_cap} (residual {residual:e})")]
    NoConvergence { t_cap: f64, residual: f64 },

    #[error("covariance is not stationary for any continuous unraveling (residual {residual:e})")]
    InconsistentSystem { residual: f64 },

    #[error("stationarity equations are underdetermined: every unraveling leaves this covariance fixed")]
    Underdetermined,

    #[error("survival probability did not cross the largest eigenvalue before t = {t_max}")]
    NoCrossing { t_max: f64 },

    #[error("model is degenerate: {0}")]
    Degenerate(String),

    #[error("Fock truncation too small: population of the top level is {tail:e}")]
    TruncationTail { tail: f64 },

    #[error("state norm collapsed to {norm:e} during a stochastic step; reduce dt")]
    NormCollapse { norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
