use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries. Fails when the length does not
    /// match or an entry is not finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Two distinct rows, mutably; requires `i < j`.
    pub(crate) fn row_pair_mut(&mut self, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(i < j);
        let c = self.cols;
        let (head, tail) = self.data.split_at_mut(j * c);
        (&mut head[i * c..(i + 1) * c], &mut tail[..c])
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matvec: vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    /// `Aᵀ y`.
    pub fn matvec_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::Dimension(format!(
                "matvec_t: vector of length {} against {} rows",
                y.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        self.matvec_t_into(y, &mut out);
        Ok(out)
    }

    /// Unchecked `out = A x` for hot loops. Lengths are debug-asserted.
    #[inline]
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        if self.cols == 0 {
            out.fill(0.0);
            return;
        }
        super::kernels::gemv(&self.data, self.cols, x, out);
    }

    /// Unchecked `out = Aᵀ y` for hot loops.
    #[inline]
    pub fn matvec_t_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        if self.cols == 0 {
            return;
        }
        super::kernels::gemv_t(&self.data, self.cols, y, out);
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    /// Submatrix made of the listed columns, in the listed order.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, columns.len());
        for i in 0..self.rows {
            let src = self.row(i);
            for (k, &j) in columns.iter().enumerate() {
                out.data[i * columns.len() + k] = src[j];
            }
        }
        out
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    super::axpy(a, rhs.row(k), orow);
                }
            }
        }
        Ok(out)
    }

    /// `A Aᵀ`, symmetric `rows × rows`.
    pub fn gram(&self) -> Self {
        let m = self.rows;
        let mut g = Self::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = super::dot(self.row(i), self.row(j));
                g.data[i * m + j] = v;
                g.data[j * m + i] = v;
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        super::norm2(&self.data)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Sampler;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut s = Sampler::new(seed, 0);
        DenseMatrix::new(rows, cols, (0..rows * cols).map(|_| s.normal()).collect()).unwrap()
    }

    #[test]
    fn identity_products() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(i2.matvec(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        assert_eq!(i2.matvec_t(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn row_vector_products() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert_eq!(a.matvec(&[2.0, 5.0]).unwrap(), vec![7.0]);
        assert_eq!(a.matvec_t(&[4.0]).unwrap(), vec![4.0, 4.0]);
    }

    #[test]
    fn matvec_matches_naive_loop() {
        let a = random(5, 8, 1);
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.37).sin()).collect();
        let got = a.matvec(&x).unwrap();
        for i in 0..5 {
            let mut want = 0.0;
            for j in 0..8 {
                want += a.get(i, j) * x[j];
            }
            assert!((got[i] - want).abs() <= 1e-13 * want.abs().max(1.0));
        }
    }

    #[test]
    fn matvec_t_matches_explicit_transpose() {
        let a = random(5, 8, 2);
        let y: Vec<f64> = (0..5).map(|i| 1.0 - i as f64 * 0.3).collect();
        let got = a.matvec_t(&y).unwrap();
        let want = a.transpose().matvec(&y).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-13 * w.abs().max(1.0));
        }
    }

    #[test]
    fn dimension_errors() {
        let a = DenseMatrix::identity(2);
        assert!(matches!(a.matvec(&[1.0]), Err(Error::Dimension(_))));
        assert!(matches!(a.matvec_t(&[1.0, 2.0, 3.0]), Err(Error::Dimension(_))));
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn matmul_and_gram() {
        let a = random(3, 4, 5);
        let g = a.gram();
        let g2 = a.matmul(&a.transpose()).unwrap();
        for (x, y) in g.data().iter().zip(g2.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
