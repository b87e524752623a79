use num_complex::Complex64;

use super::CMatrix;

/// Compressed-row complex operator. The oscillator operators have O(1)
/// nonzeros per row, which keeps trajectory and density-matrix steps at
/// O(N) and O(N²) instead of O(N²) and O(N³).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOp {
    pub fn from_dense(m: &CMatrix) -> Self {
        assert!(m.is_square(), "operator must be square");
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    /// `A ρ`.
    pub fn mul_left(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, rho.ncols());
        for j in 0..rho.ncols() {
            let src = rho.column(j);
            let mut dst = out.column_mut(j);
            for i in 0..self.dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * src[self.cols[k]];
                }
                dst[i] = acc;
            }
        }
        out
    }

    /// `ρ A`.
    pub fn mul_right(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.nrows(), self.dim);
        for k in 0..self.dim {
            let src = rho.column(k).clone_owned();
            for idx in self.row_ptr[k]..self.row_ptr[k + 1] {
                let v = self.vals[idx];
                out.column_mut(self.cols[idx]).axpy(v, &src, Complex64::new(1.0, 0.0));
            }
        }
        out
    }
}
