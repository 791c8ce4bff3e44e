//! Small dense row-major matrices with counted products.

use serde::{Deserialize, Serialize};

use crate::counters::OpRecorder;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a matrix from row vectors. Returns `None` on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[f64], rec: &OpRecorder) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        rec.mat_vec(self.rows, self.cols);
        self.data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ · w`.
    pub fn tmul_vec(&self, w: &[f64], rec: &OpRecorder) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.rows);
        rec.mat_vec(self.cols, self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &wr) in w.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * wr;
            }
        }
        out
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix, rec: &OpRecorder) -> Matrix {
        debug_assert_eq!(self.cols, other.rows);
        rec.mat_mat(self.rows, self.cols, other.cols);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (o, b) in dst.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · Diag_d`: scales column `c` by `d[c]`.
    pub fn mul_diag(&self, d: &[f64], rec: &OpRecorder) -> Matrix {
        debug_assert_eq!(d.len(), self.cols);
        rec.mult_adds((self.rows * self.cols) as u64);
        let mut out = self.clone();
        for r in 0..self.rows {
            for (o, s) in out.data[r * self.cols..(r + 1) * self.cols].iter_mut().zip(d) {
                *o *= s;
            }
        }
        out
    }

    /// `Diag_d · self`: scales row `r` by `d[r]`.
    pub fn diag_mul(&self, d: &[f64], rec: &OpRecorder) -> Matrix {
        debug_assert_eq!(d.len(), self.rows);
        rec.mult_adds((self.rows * self.cols) as u64);
        let mut out = self.clone();
        for (r, s) in d.iter().enumerate() {
            for o in &mut out.data[r * self.cols..(r + 1) * self.cols] {
                *o *= s;
            }
        }
        out
    }

    /// Largest absolute entrywise difference; `inf` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        max_abs_diff(&self.data, &other.data)
    }

    /// Index of the first row that does not sum to one within `tol`, with its sum.
    pub fn non_stochastic_row(&self, tol: f64) -> Option<(usize, f64)> {
        (0..self.rows).find_map(|r| {
            let s: f64 = self.row(r).iter().sum();
            ((s - 1.0).abs() > tol).then_some((r, s))
        })
    }

    pub fn all_finite_nonneg(&self) -> bool {
        self.data.iter().all(|x| x.is_finite() && *x >= 0.0)
    }
}

/// Componentwise product `a * b`.
pub fn hadamard(a: &[f64], b: &[f64], rec: &OpRecorder) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    rec.mult_adds(a.len() as u64);
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Max relative difference `|a - b| / max(|a|, |b|, floor)` over components.
pub fn max_rel_diff(a: &[f64], b: &[f64], floor: f64) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Scales a nonnegative vector to sum to one; `None` when the sum is zero.
pub fn normalized(v: &[f64]) -> Option<(Vec<f64>, f64)> {
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        Some((v.iter().map(|x| x / s).collect(), s))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_and_counts() {
        let rec = OpRecorder::new();
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.mul_vec(&[1.0, 0.0, 1.0], &rec), vec![4.0, 10.0]);
        assert_eq!(m.tmul_vec(&[1.0, 1.0], &rec), vec![5.0, 7.0, 9.0]);
        let p = m.matmul(&m.transpose(), &rec);
        assert_eq!(p.to_rows(), vec![vec![14.0, 32.0], vec![32.0, 77.0]]);
        let c = rec.snapshot();
        assert_eq!(c.matrix_vector_mults, 2);
        assert_eq!(c.matrix_matrix_mults, 1);
        assert_eq!(c.scalar_mult_adds, 6 + 6 + 12);
    }

    #[test]
    fn diag_scaling_matches_explicit_diag() {
        let rec = OpRecorder::new();
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let d = [2.0, -1.0];
        let explicit = Matrix::from_fn(2, 2, |r, c| if r == c { d[r] } else { 0.0 });
        assert_eq!(m.mul_diag(&d, &rec), m.matmul(&explicit, &rec));
        assert_eq!(m.diag_mul(&d, &rec), explicit.matmul(&m, &rec));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_none());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalized(&[1.0, 3.0]).unwrap().0, vec![0.25, 0.75]);
        assert!(normalized(&[0.0, 0.0]).is_none());
    }
}
