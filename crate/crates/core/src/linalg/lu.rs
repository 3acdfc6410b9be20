use super::DenseMatrix;
use crate::error::{Error, Result};

/// Pivots smaller than this fraction of `‖B‖_F` mark the matrix singular.
const PIVOT_THRESHOLD: f64 = 1e-12;

/// LU factorization with partial (row) pivoting: `P B = L U`, stored packed.
#[derive(Clone, Debug)]
pub struct LuFactors {
    lu: DenseMatrix,
    /// `perm[k]` is the original row placed at position `k`.
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(b: &DenseMatrix) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                b.rows(),
                b.cols()
            )));
        }
        let n = b.rows();
        let threshold = PIVOT_THRESHOLD * b.frobenius_norm();
        let mut lu = b.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu.get(i, k).abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > threshold) {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot,
                    threshold,
                });
            }
            if p != k {
                let (rk, rp) = lu.row_pair_mut(k, p);
                rk.swap_with_slice(rp);
                perm.swap(k, p);
            }
            let pivot = lu.get(k, k);
            for i in (k + 1)..n {
                let (rk, ri) = lu.row_pair_mut(k, i);
                let factor = ri[k] / pivot;
                ri[k] = factor;
                if factor != 0.0 {
                    for (x, y) in ri[k + 1..].iter_mut().zip(&rk[k + 1..]) {
                        *x -= factor * y;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `B x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::Dimension(format!(
                "rhs of length {} for a {n}x{n} system",
                rhs.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = (0..i).map(|j| row[j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = ((i + 1)..n).map(|j| row[j] * x[j]).sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }

    /// Solves `Bᵀ x = rhs`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::Dimension(format!(
                "rhs of length {} for a {n}x{n} system",
                rhs.len()
            )));
        }
        // Bᵀ = Uᵀ Lᵀ P, so solve Uᵀ w = rhs, Lᵀ v = w, then x = Pᵀ v.
        let mut w = rhs.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu.get(j, i) * w[j]).sum();
            w[i] = (w[i] - s) / self.lu.get(i, i);
        }
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| self.lu.get(j, i) * w[j]).sum();
            w[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = w[k];
        }
        Ok(x)
    }

    /// Solves `B X = rhs` column by column.
    pub fn solve_matrix(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if rhs.rows() != self.dim() {
            return Err(Error::Dimension(format!(
                "rhs with {} rows for a {n}x{n} system",
                rhs.rows(),
                n = self.dim()
            )));
        }
        let mut out = DenseMatrix::zeros(rhs.rows(), rhs.cols());
        for j in 0..rhs.cols() {
            let col = self.solve(&rhs.column(j))?;
            for (i, v) in col.into_iter().enumerate() {
                out.set(i, j, v);
            }
        }
        Ok(out)
    }
}

/// Solves `B X = rhs` by LU with row pivoting.
pub fn lu_solve(b: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    LuFactors::factor(b)?.solve_matrix(rhs)
}
