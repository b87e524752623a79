use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lindblad::{lindblad_rhs, LindbladModel};
use super::noise::NoiseCorrelation;
use super::states::{pure_moments, PureState, QuadratureOps};
use super::{CMatrix, FockSpace};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Norm below which an unnormalized step is treated as a collapse.
const MIN_STEP_NORM: f64 = 1e-6;

/// Scratch buffers for in-place trajectory steps.
#[derive(Debug, Clone)]
pub struct SseWorkspace {
    drift: Vec<Complex64>,
    jumps: Vec<Vec<Complex64>>,
    next: Vec<Complex64>,
    noise: Vec<Complex64>,
    expect: Vec<Complex64>,
}

impl SseWorkspace {
    pub fn new(model: &LindbladModel) -> Self {
        let n = model.dim();
        let k = model.collapse_sparse().len();
        Self {
            drift: vec![ZERO; n],
            jumps: vec![vec![ZERO; n]; k],
            next: vec![ZERO; n],
            noise: vec![ZERO; k],
            expect: vec![ZERO; k],
        }
    }
}

// Euler-Maruyama step of
// dψ = [(-iH - ½Σc†c + Σ<c>*c - ½Σ|<c>|²) dt + Σ dW_k (c_k - <c_k>)] ψ
// followed by renormalization.
fn step_in_place(
    v: &mut [Complex64],
    model: &LindbladModel,
    dw: &[Complex64],
    dt: f64,
    ws: &mut SseWorkspace,
) -> Result<()> {
    model.effective().apply(v, &mut ws.drift);
    for ((c, buf), e) in model.collapse_sparse().iter().zip(ws.jumps.iter_mut()).zip(ws.expect.iter_mut()) {
        c.apply(v, buf);
        *e = v.iter().zip(buf.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    }
    let expect = &ws.expect;
    let mut norm2 = 0.0;
    for i in 0..v.len() {
        let mut d = ws.drift[i];
        let mut s = ZERO;
        for k in 0..dw.len() {
            let ck = ws.jumps[k][i];
            d += expect[k].conj() * ck - 0.5 * expect[k].norm_sqr() * v[i];
            s += dw[k] * (ck - expect[k] * v[i]);
        }
        let value = v[i] + d * dt + s;
        norm2 += value.norm_sqr();
        ws.next[i] = value;
    }
    let norm = norm2.sqrt();
    if !(norm >= MIN_STEP_NORM) || !norm.is_finite() {
        return Err(Error::NormCollapse { norm });
    }
    let inv = 1.0 / norm;
    for (dst, src) in v.iter_mut().zip(&ws.next) {
        *dst = src * inv;
    }
    Ok(())
}

/// One trajectory step with caller-supplied increments `dW_k`.
pub fn sse_step_with_increments(
    psi: &PureState,
    model: &LindbladModel,
    dw: &[Complex64],
    dt: f64,
) -> Result<PureState> {
    if dw.len() != model.collapse_sparse().len() {
        return Err(Error::InvalidParameter("one increment per collapse operator required".into()));
    }
    let mut ws = SseWorkspace::new(model);
    let mut v = psi.vector().clone();
    step_in_place(v.as_mut_slice(), model, dw, dt, &mut ws)?;
    PureState::normalized(v)
}

/// One trajectory step with increments drawn from `corr`.
pub fn sse_step<R: Rng + ?Sized>(
    psi: &PureState,
    model: &LindbladModel,
    corr: &NoiseCorrelation,
    dt: f64,
    rng: &mut R,
) -> Result<PureState> {
    let mut dw = vec![ZERO; corr.channels()];
    corr.sample_into(dt, rng, &mut dw);
    sse_step_with_increments(psi, model, &dw, dt)
}

/// `dP = L(P) dt + Σ_k H[dW_k c_k] P` with
/// `H[r]ρ = rρ + ρr† - Tr[rρ + ρr†] ρ`.
pub fn projector_increment(p: &CMatrix, model: &LindbladModel, dw: &[Complex64], dt: f64) -> CMatrix {
    let mut out = lindblad_rhs(p, model) * Complex64::new(dt, 0.0);
    for (c, w) in model.collapse_ops().iter().zip(dw) {
        let r = c * *w;
        let rp = &r * p;
        let sym = &rp + rp.adjoint();
        let tr = sym.trace();
        out += sym - p * tr;
    }
    out
}

/// Trace distance `½ Σ |eig(a - b)|` of two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()) * Complex64::new(0.5, 0.0);
    0.5 * h.symmetric_eigenvalues().iter().map(|l| l.abs()).sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct EnsembleStatistics {
    /// Quadrature moments of each trajectory's final state.
    pub final_moments: Vec<GaussianState>,
    /// Ensemble average of the final projectors.
    pub mean_density: CMatrix,
    /// Largest top-level population over all final states.
    pub max_tail: f64,
    pub steps: usize,
    pub dt: f64,
}

/// Integrates `n_traj` independent trajectories from `psi0` to time `t`.
/// Trajectory `i` draws from a ChaCha8 stream `i` keyed by `seed`, so the
/// result does not depend on the thread count.
pub fn simulate_ensemble(
    model: &LindbladModel,
    corr: &NoiseCorrelation,
    psi0: &PureState,
    n_traj: usize,
    t: f64,
    dt: f64,
    seed: u64,
) -> Result<EnsembleStatistics> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("need at least one trajectory".into()));
    }
    if !(dt > 0.0) || !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("need t >= 0 and dt > 0, got t = {t}, dt = {dt}")));
    }
    if corr.channels() != model.collapse_ops().len() {
        return Err(Error::InvalidParameter("noise channels must match collapse operators".into()));
    }
    if psi0.dim() != model.dim() {
        return Err(Error::InvalidParameter("initial state dimension mismatch".into()));
    }
    let steps = (t / dt).ceil() as usize;
    let h = if steps == 0 { dt } else { t / steps as f64 };
    let ops = QuadratureOps::new(&FockSpace::new(model.dim())?);

    let finals: Vec<PureState> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut ws = SseWorkspace::new(model);
            let mut v = psi0.vector().clone();
            for _ in 0..steps {
                corr.sample_into(h, &mut rng, &mut ws.noise);
                let dw = std::mem::take(&mut ws.noise);
                let res = step_in_place(v.as_mut_slice(), model, &dw, h, &mut ws);
                ws.noise = dw;
                res?;
            }
            PureState::normalized(v)
        })
        .collect::<Result<_>>()?;

    let n = model.dim();
    let mut mean_density = CMatrix::zeros(n, n);
    let mut max_tail: f64 = 0.0;
    for psi in &finals {
        let v = psi.vector();
        mean_density += v * v.adjoint();
        max_tail = max_tail.max(v[n - 1].norm_sqr());
    }
    mean_density /= Complex64::new(n_traj as f64, 0.0);
    let final_moments = finals.iter().map(|p| pure_moments(p, &ops)).collect();
    Ok(EnsembleStatistics { final_moments, mean_density, max_tail, steps, dt: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::lindblad::{evolve_density, opo_model, DENSITY_STEP};
    use crate::gaussian::OpoModel;
    use crate::unraveling::UnravelingParam;

    fn opo(chi: f64, dim: usize) -> LindbladModel {
        opo_model(&OpoModel::new(chi).unwrap(), &FockSpace::new(dim).unwrap())
    }

    fn coherent(alpha: Complex64, dim: usize) -> PureState {
        let mut v = nalgebra::DVector::zeros(dim);
        let mut coeff = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..dim {
            if n > 0 {
                coeff *= alpha / (n as f64).sqrt();
            }
            v[n] = coeff;
        }
        PureState::normalized(v).unwrap()
    }

    #[test]
    fn vector_step_matches_projector_increment_to_first_order() {
        let m = opo(0.4, 30);
        let psi = coherent(Complex64::new(0.5, 0.2), 30);
        let p = psi.vector() * psi.vector().adjoint();
        let dt = 1e-6;
        let dw = [Complex64::new(3e-4, -2e-4)];
        let next = sse_step_with_increments(&psi, &m, &dw, dt).unwrap();
        let p_next = next.vector() * next.vector().adjoint();
        let predicted = &p + projector_increment(&p, &m, &dw, dt);
        // Itô corrections are O(|dW|²) ~ 1e-7.
        assert!((p_next - predicted).camax() < 1e-6);
    }

    #[test]
    fn zero_noise_at_zero_chi_keeps_vacuum() {
        let m = opo(0.0, 12);
        let corr = NoiseCorrelation::single(&UnravelingParam::new(0.2, 0.5).unwrap());
        let stats = simulate_ensemble(&m, &corr, &PureState::basis(0, 12), 8, 2.0, 1e-3, 5).unwrap();
        for g in &stats.final_moments {
            assert!(g.mean.norm() < 1e-12);
            assert!((g.cov.gamma - 1.0).abs() < 1e-12 && (g.cov.alpha - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_is_reproducible() {
        let m = opo(0.5, 16);
        let corr = NoiseCorrelation::single(&UnravelingParam::new(0.0, 1.0).unwrap());
        let psi0 = PureState::basis(0, 16);
        let a = simulate_ensemble(&m, &corr, &psi0, 6, 0.5, 1e-3, 42).unwrap();
        let b = simulate_ensemble(&m, &corr, &psi0, 6, 0.5, 1e-3, 42).unwrap();
        let c = simulate_ensemble(&m, &corr, &psi0, 6, 0.5, 1e-3, 43).unwrap();
        assert_eq!(a.final_moments, b.final_moments);
        assert_ne!(a.final_moments, c.final_moments);
    }

    #[test]
    fn ensemble_average_tracks_master_equation() {
        let m = opo(0.5, 20);
        let corr = NoiseCorrelation::single(&UnravelingParam::new(-1.0, 0.0).unwrap());
        let psi0 = PureState::basis(0, 20);
        let stats = simulate_ensemble(&m, &corr, &psi0, 400, 1.0, 2e-3, 7).unwrap();
        let p0 = psi0.vector() * psi0.vector().adjoint();
        let exact = evolve_density(&p0, &m, 1.0, DENSITY_STEP).unwrap();
        let d = trace_distance(&stats.mean_density, &exact);
        assert!(d < 0.05, "trace distance {d}");
    }

    #[test]
    fn trace_distance_basics() {
        let a = PureState::basis(0, 3);
        let b = PureState::basis(1, 3);
        let pa = a.vector() * a.vector().adjoint();
        let pb = b.vector() * b.vector().adjoint();
        assert!((trace_distance(&pa, &pb) - 1.0).abs() < 1e-14);
        assert_eq!(trace_distance(&pa, &pa), 0.0);
    }
}
