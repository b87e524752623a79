use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::unraveling::UnravelingParam;

/// Correlations of complex Wiener increments,
/// `dW_j dW_k* = δ_jk dt` and `dW_j dW_k = u_jk dt`.
#[derive(Debug, Clone)]
pub struct NoiseCorrelation {
    u: DMatrix<Complex64>,
    // Square root of the per-unit-time covariance of (Re dW, Im dW).
    factor: DMatrix<f64>,
}

impl NoiseCorrelation {
    pub fn new(u: DMatrix<Complex64>) -> Result<Self> {
        let k = u.nrows();
        if !u.is_square() || k == 0 {
            return Err(Error::InvalidParameter("correlation matrix must be square and non-empty".into()));
        }
        if (&u - u.transpose()).camax() > 1e-12 {
            return Err(Error::InvalidParameter("correlation matrix must be symmetric".into()));
        }
        if let Some(v) = u.iter().find(|v| v.norm() > 1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("|u_jk| = {} exceeds 1", v.norm())));
        }
        let mut cov = DMatrix::<f64>::zeros(2 * k, 2 * k);
        for i in 0..k {
            for j in 0..k {
                let delta = if i == j { 1.0 } else { 0.0 };
                cov[(i, j)] = 0.5 * (delta + u[(i, j)].re);
                cov[(k + i, k + j)] = 0.5 * (delta - u[(i, j)].re);
                cov[(i, k + j)] = 0.5 * u[(i, j)].im;
                cov[(k + i, j)] = 0.5 * u[(i, j)].im;
            }
        }
        let eig = SymmetricEigen::new(cov);
        let min = eig.eigenvalues.min();
        if min < -1e-12 {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self { u, factor })
    }

    pub fn single(u: &UnravelingParam) -> Self {
        Self::new(DMatrix::from_element(1, 1, u.as_complex())).expect("|u| <= 1 is always admissible")
    }

    pub fn channels(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, out: &mut [Complex64]) {
        let k = self.channels();
        assert_eq!(out.len(), k);
        let mut stack = [0.0f64; 16];
        let mut heap = Vec::new();
        let z: &mut [f64] = if 2 * k <= stack.len() {
            &mut stack[..2 * k]
        } else {
            heap.resize(2 * k, 0.0);
            &mut heap
        };
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let scale = dt.sqrt();
        let row = |i: usize| (0..2 * k).map(|m| self.factor[(i, m)] * z[m]).sum::<f64>() * scale;
        for (j, o) in out.iter_mut().enumerate() {
            *o = Complex64::new(row(j), row(k + j));
        }
    }
}

pub fn sample_noise<R: Rng + ?Sized>(corr: &NoiseCorrelation, dt: f64, rng: &mut R) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); corr.channels()];
    corr.sample_into(dt, rng, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(corr: &NoiseCorrelation, dt: f64, n: usize) -> (Complex64, Complex64) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ww = Complex64::new(0.0, 0.0);
        let mut wwc = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let dw = sample_noise(corr, dt, &mut rng)[0];
            ww += dw * dw;
            wwc += dw * dw.conj();
        }
        (ww / (n as f64 * dt), wwc / (n as f64 * dt))
    }

    #[test]
    fn single_channel_statistics() {
        let n = 400_000;
        let se = 4.0 * (2.0 / n as f64).sqrt();
        for (r, h) in [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.3, -0.6), (0.0, 1.0)] {
            let u = UnravelingParam::new(r, h).unwrap();
            let (ww, wwc) = moments(&NoiseCorrelation::single(&u), 1e-3, n);
            assert!((wwc.re - 1.0).abs() < se && wwc.im.abs() < 1e-12, "u = {u:?}: {wwc}");
            assert!((ww - u.as_complex()).norm() < se, "u = {u:?}: {ww}");
        }
    }

    #[test]
    fn homodyne_increments_are_real() {
        let corr = NoiseCorrelation::single(&UnravelingParam::new(1.0, 0.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(sample_noise(&corr, 0.01, &mut rng)[0].im.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_inadmissible_correlations() {
        let big = DMatrix::from_element(1, 1, Complex64::new(1.2, 0.0));
        assert!(NoiseCorrelation::new(big).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0),
            Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.0),
        ]);
        assert!(NoiseCorrelation::new(asym).is_err());
        // Entrywise bounded but jointly not positive.
        let joint = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0),
        ]);
        assert!(matches!(NoiseCorrelation::new(joint), Err(Error::NotPositiveSemidefinite { .. })));
    }
}
