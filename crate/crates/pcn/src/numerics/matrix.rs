//! Dense row-major `f64` matrices with a fixed evaluation order.

use crate::{PcnError, Result};

/// Dense row-major matrix of `f64`.
///
/// Dimensions are always at least 1×1. Values are finite on construction and
/// after every operation that returns a `Result`; an operation that would
/// produce a non-finite entry reports [`PcnError::Divergence`] instead of
/// returning the poisoned value.
///
/// Determinism contract: for every output element, sums over the inner
/// dimension run in ascending index order and no fused multiply-add is used,
/// so results are bit-identical to the naive schoolbook loops on any build
/// of this crate for a given target.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zero matrix. Panics if either dimension is zero (a programming
    /// error, unlike data-dependent failures which are `Result`s).
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Matrix with every entry set to `value`.
    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Matrix> {
        if !value.is_finite() {
            return Err(PcnError::Divergence {
                layer: None,
                context: format!("fill value {value} is not finite"),
            });
        }
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Ok(Matrix { rows, cols, data: vec![value; rows * cols] })
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from a row-major buffer. Fails on a length/shape mismatch or a
    /// non-finite entry.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if rows == 0 || cols == 0 {
            return Err(PcnError::ShapeMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(PcnError::ShapeMismatch(format!(
                "buffer of length {} cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let m = Matrix { rows, cols, data };
        m.ensure_finite("from_vec")?;
        Ok(m)
    }

    /// Build from nested rows (test and fixture convenience).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(PcnError::ShapeMismatch("from_rows needs a non-empty grid".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(PcnError::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Entry at (row, col). Panics out of range.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of range");
        self.data[row * self.cols + col]
    }

    /// Row-major view of the underlying buffer.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Construct without the finiteness scan; callers must have produced the
    /// buffer from finite inputs via non-escaping operations, or run their
    /// own check before handing the value out.
    pub(crate) fn from_raw_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Matrix {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    /// One row as a slice.
    pub fn row(&self, r: usize) -> &[f64] {
        assert!(r < self.rows, "row out of range");
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy of one column.
    pub fn col(&self, c: usize) -> Vec<f64> {
        assert!(c < self.cols, "column out of range");
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    /// Matrix product `self * rhs`.
    ///
    /// The sum over the inner dimension runs in ascending index order for
    /// every output element (the i-k-j loop below accumulates term k before
    /// term k+1 into each output), which makes the result bit-identical to
    /// the naive i-j-k triple loop.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(PcnError::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (m, inner, n) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![0.0f64; m * n];
        for i in 0..m {
            let lhs_row = &self.data[i * inner..(i + 1) * inner];
            let out_row = &mut out[i * n..(i + 1) * n];
            for (k, &aik) in lhs_row.iter().enumerate() {
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += aik * b;
                }
            }
        }
        let out = Matrix { rows: m, cols: n, data: out };
        out.ensure_finite("matmul")?;
        Ok(out)
    }

    /// Transpose. Pure data movement; cannot fail.
    pub fn transpose(&self) -> Matrix {
        let mut out = vec![0.0f64; self.rows * self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        Matrix { rows: self.cols, cols: self.rows, data: out }
    }

    /// Elementwise sum.
    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    /// Elementwise difference `self - rhs`.
    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "hadamard", |a, b| a * b)
    }

    /// Scalar multiple.
    pub fn scale(&self, k: f64) -> Result<Matrix> {
        let data = self.data.iter().map(|v| v * k).collect();
        let out = Matrix { rows: self.rows, cols: self.cols, data };
        out.ensure_finite("scale")?;
        Ok(out)
    }

    /// Outer product of two column vectors (`u: n×1`, `v: m×1` → `n×m`).
    pub fn outer(u: &Matrix, v: &Matrix) -> Result<Matrix> {
        if u.cols != 1 || v.cols != 1 {
            return Err(PcnError::ShapeMismatch(format!(
                "outer product needs column vectors, got {}x{} and {}x{}",
                u.rows, u.cols, v.rows, v.cols
            )));
        }
        let mut data = Vec::with_capacity(u.rows * v.rows);
        for &a in &u.data {
            for &b in &v.data {
                data.push(a * b);
            }
        }
        let out = Matrix { rows: u.rows, cols: v.rows, data };
        out.ensure_finite("outer")?;
        Ok(out)
    }

    /// Sum of squared entries, accumulated in row-major order.
    pub fn frobenius_sq(&self) -> f64 {
        let mut acc = 0.0;
        for &v in &self.data {
            acc += v * v;
        }
        acc
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            let bad = self
                .data
                .iter()
                .position(|v| !v.is_finite())
                .expect("a non-finite entry exists");
            Err(PcnError::Divergence {
                layer: None,
                context: format!(
                    "{context} produced a non-finite entry at ({}, {})",
                    bad / self.cols,
                    bad % self.cols
                ),
            })
        }
    }

    fn zip_with(&self, rhs: &Matrix, op: &str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(PcnError::ShapeMismatch(format!(
                "elementwise {op} of {}x{} with {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        let out = Matrix { rows: self.rows, cols: self.cols, data };
        out.ensure_finite(op)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_matches_hand_computed_product() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.as_slice(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_is_bit_identical_to_naive_triple_loop() {
        // Adversarial magnitudes: mixing 1e16 with 1 makes the sum order
        // observable, so this checks the ascending-k contract, not just
        // approximate correctness.
        let mut rng = crate::numerics::Rng::new(7);
        let (m, k, n) = (5, 17, 4);
        let scales = [1e16, 1.0, 1e-8, -1e16, 3.0];
        let a_data: Vec<f64> = (0..m * k)
            .map(|i| rng.uniform(-1.0, 1.0) * scales[i % scales.len()])
            .collect();
        let b_data: Vec<f64> = (0..k * n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let a = Matrix::from_vec(m, k, a_data.clone()).unwrap();
        let b = Matrix::from_vec(k, n, b_data.clone()).unwrap();
        let fast = a.matmul(&b).unwrap();
        let mut naive = vec![0.0f64; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for kk in 0..k {
                    acc += a_data[i * k + kk] * b_data[kk * n + j];
                }
                naive[i * n + j] = acc;
            }
        }
        for (got, want) in fast.as_slice().iter().zip(&naive) {
            assert_eq!(got.to_bits(), want.to_bits());
        }
    }

    #[test]
    fn matmul_rejects_mismatched_inner_dimension() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        assert!(matches!(a.matmul(&b), Err(PcnError::ShapeMismatch(_))));
    }

    #[test]
    fn overflow_is_reported_as_divergence_not_inf() {
        let a = Matrix::filled(1, 1, 1e308).unwrap();
        let err = a.scale(10.0).unwrap_err();
        assert!(matches!(err, PcnError::Divergence { .. }));
        let b = Matrix::filled(1, 1, 1e308).unwrap();
        assert!(matches!(a.add(&b), Err(PcnError::Divergence { .. })));
    }

    #[test]
    fn from_vec_rejects_non_finite_and_bad_lengths() {
        assert!(matches!(
            Matrix::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(PcnError::Divergence { .. })
        ));
        assert!(matches!(
            Matrix::from_vec(2, 2, vec![0.0; 3]),
            Err(PcnError::ShapeMismatch(_))
        ));
        assert!(matches!(Matrix::from_vec(0, 2, vec![]), Err(PcnError::ShapeMismatch(_))));
    }

    #[test]
    fn transpose_round_trips() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let t = a.transpose();
        assert_eq!(t.shape(), (3, 2));
        assert_eq!(t.get(0, 1), 4.0);
        assert_eq!(t.transpose(), a);
    }

    #[test]
    fn identity_is_matmul_neutral() {
        let a = Matrix::from_rows(&[vec![1.5, -2.0], vec![0.25, 9.0]]).unwrap();
        let i = Matrix::identity(2);
        assert_eq!(a.matmul(&i).unwrap(), a);
        assert_eq!(i.matmul(&a).unwrap(), a);
    }

    #[test]
    fn outer_product_shapes_and_values() {
        let u = Matrix::from_vec(2, 1, vec![2.0, 3.0]).unwrap();
        let v = Matrix::from_vec(3, 1, vec![1.0, 10.0, 100.0]).unwrap();
        let o = Matrix::outer(&u, &v).unwrap();
        assert_eq!(o.shape(), (2, 3));
        assert_eq!(o.as_slice(), &[2.0, 20.0, 200.0, 3.0, 30.0, 300.0]);
        assert!(Matrix::outer(&u, &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn frobenius_sq_sums_squares() {
        let a = Matrix::from_rows(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.frobenius_sq(), 25.0);
    }
}
