//! Edge matrices kept as `J · R`, a 0/1 expansion times an `L x K` table.
//!
//! `J` has exactly one 1 per row, so it is stored as the column index of
//! that 1. Raking keeps the outer left factor and folds everything else into
//! the right factor; every product then has one of four shapes:
//!
//! 1. `L x K` by `K x L` (here `K x L` is a `J`, so a bucket sum);
//! 2. `L x K` by a `K x K` diagonal;
//! 3. `L x L` by `L x K`;
//! 4. `L x K` by a vector.

use super::super::contraction::Coefficient;
use crate::counters::{FactoredShape, OpRecorder};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct FactoredMatrix {
    /// Row `i` of the left factor has its single 1 in column `select[i]`.
    select: Vec<usize>,
    right: Matrix,
}

impl FactoredMatrix {
    pub fn new(select: Vec<usize>, right: Matrix) -> Result<Self> {
        if let Some(&bad) = select.iter().find(|&&s| s >= right.rows()) {
            return Err(Error::DimensionMismatch {
                node: "factored left".into(),
                expected: right.rows(),
                found: bad + 1,
            });
        }
        Ok(FactoredMatrix { select, right })
    }

    /// `I_k` as `I_k · I_k`.
    pub fn identity(k: usize) -> Self {
        FactoredMatrix {
            select: (0..k).collect(),
            right: Matrix::identity(k),
        }
    }

    pub fn select(&self) -> &[usize] {
        &self.select
    }

    /// Separator size `L`.
    pub fn inner_dim(&self) -> usize {
        self.right.rows()
    }

    /// Dense `J`.
    pub fn left_matrix(&self) -> Matrix {
        let mut j = Matrix::zeros(self.select.len(), self.right.rows());
        for (r, &c) in self.select.iter().enumerate() {
            j.set(r, c, 1.0);
        }
        j
    }

    pub fn right(&self) -> &Matrix {
        &self.right
    }
}

/// `right · Diag_d`, a type-2 product.
fn right_diag(m: &Matrix, d: &[f64], rec: &OpRecorder) -> Matrix {
    rec.shape(FactoredShape::LkByDiag);
    m.mul_diag(d, rec)
}

/// `m · J` for a selection `J`; the type-1 product, a bucket sum over
/// columns. Charged one mult-add per entry of `m`.
fn times_selection(m: &Matrix, select: &[usize], width: usize, rec: &OpRecorder) -> Matrix {
    rec.shape(FactoredShape::LkByKl);
    rec.mult_adds((m.rows() * m.cols()) as u64);
    let mut out = Matrix::zeros(m.rows(), width);
    for r in 0..m.rows() {
        for (k, &s) in select.iter().enumerate() {
            out.set(r, s, out.get(r, s) + m.get(r, k));
        }
    }
    out
}

impl Coefficient for FactoredMatrix {
    fn rows(&self) -> usize {
        self.select.len()
    }

    fn cols(&self) -> usize {
        self.right.cols()
    }

    fn apply(&self, v: &[f64], rec: &OpRecorder) -> Vec<f64> {
        rec.shape(FactoredShape::LkByVec);
        let t = self.right.mul_vec(v, rec);
        self.select.iter().map(|&s| t[s]).collect()
    }

    fn apply_transpose(&self, w: &[f64], rec: &OpRecorder) -> Vec<f64> {
        rec.shape(FactoredShape::LkByVec);
        let mut u = vec![0.0; self.right.rows()];
        for (&s, x) in self.select.iter().zip(w) {
            u[s] += x;
        }
        self.right.tmul_vec(&u, rec)
    }

    /// `J_o · (((R_o · Diag_d) · J_i) · R_i)` with `d = leaf · λ`.
    fn rake(outer: &Self, leaf: &Self, lambda: &[f64], inner: &Self, rec: &OpRecorder) -> Self {
        let d = leaf.apply(lambda, rec);
        let scaled = right_diag(&outer.right, &d, rec);
        let core = times_selection(&scaled, &inner.select, inner.right.rows(), rec);
        rec.shape(FactoredShape::LlByLk);
        FactoredMatrix {
            select: outer.select.clone(),
            right: core.matmul(&inner.right, rec),
        }
    }

    fn materialize(&self) -> Matrix {
        Matrix::from_fn(self.select.len(), self.right.cols(), |r, c| self.right.get(self.select[r], c))
    }

    fn perturb_first(&mut self, delta: f64) {
        let r = self.select[0];
        self.right.set(r, 0, self.right.get(r, 0) + delta);
    }
}

/// Stand-alone factored rake, for callers outside the contraction index.
pub fn factored_coeff_update(
    outer: &FactoredMatrix,
    leaf: &FactoredMatrix,
    lambda: &[f64],
    inner: &FactoredMatrix,
    rec: &OpRecorder,
) -> Result<FactoredMatrix> {
    let k = outer.cols();
    if leaf.rows() != k || inner.rows() != k || leaf.cols() != lambda.len() {
        return Err(Error::DimensionMismatch {
            node: "factored rake".into(),
            expected: k,
            found: if leaf.rows() != k { leaf.rows() } else if inner.rows() != k { inner.rows() } else { lambda.len() },
        });
    }
    Ok(<FactoredMatrix as Coefficient>::rake(outer, leaf, lambda, inner, rec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{random_cpt, rng};
    use rand::Rng;

    fn random_factored(k: usize, l: usize, g: &mut impl Rng) -> FactoredMatrix {
        let select = (0..k).map(|i| if i < l { i } else { g.random_range(0..l) }).collect();
        FactoredMatrix::new(select, Matrix::from_rows(&random_cpt(l, k, g)).unwrap()).unwrap()
    }

    #[test]
    fn identity_and_ones() {
        let i = FactoredMatrix::identity(4);
        let rec = OpRecorder::new();
        let out = factored_coeff_update(&i, &i, &[1.0; 4], &i, &rec).unwrap();
        assert_eq!(out.materialize(), Matrix::identity(4));
        assert_eq!(i.left_matrix(), Matrix::identity(4));
    }

    #[test]
    fn matches_dense_and_costs_an_eighth() {
        let mut g = rng(11);
        let (k, l) = (8, 2);
        for _ in 0..20 {
            let o = random_factored(k, l, &mut g);
            let e = random_factored(k, l, &mut g);
            let i = random_factored(k, l, &mut g);
            let lam: Vec<f64> = (0..k).map(|_| g.random_range(0.0..1.0)).collect();
            let fr = OpRecorder::new();
            let f = factored_coeff_update(&o, &e, &lam, &i, &fr).unwrap();
            let dr = OpRecorder::new();
            let d = <Matrix as Coefficient>::rake(&o.materialize(), &e.materialize(), &lam, &i.materialize(), &dr);
            assert!(f.materialize().max_abs_diff(&d) <= 1e-12);
            let (fa, da) = (fr.snapshot().scalar_mult_adds, dr.snapshot().scalar_mult_adds);
            assert!(fa * 8 <= da, "{fa} vs {da}");
            assert!(fa <= (k * l * l + 3 * k * l) as u64);
            let s = fr.shape_counts();
            assert_eq!((s.lk_by_kl, s.lk_by_diag, s.ll_by_lk, s.lk_by_vec), (1, 1, 1, 1));
            for v in [&o, &e, &i] {
                let j = v.left_matrix();
                assert!((0..k).all(|r| j.row(r).iter().sum::<f64>() == 1.0));
            }
        }
    }

    #[test]
    fn apply_matches_dense() {
        let mut g = rng(2);
        let m = random_factored(6, 3, &mut g);
        let rec = OpRecorder::new();
        let v: Vec<f64> = (0..6).map(|i| i as f64 + 0.5).collect();
        let dense = m.materialize();
        let a = m.apply(&v, &rec);
        let b = dense.mul_vec(&v, &rec);
        assert!(crate::linalg::max_abs_diff(&a, &b) < 1e-12);
        let a = m.apply_transpose(&v, &rec);
        let b = dense.tmul_vec(&v, &rec);
        assert!(crate::linalg::max_abs_diff(&a, &b) < 1e-12);
        assert!(factored_coeff_update(&m, &FactoredMatrix::identity(2), &v, &m, &rec).is_err());
    }
}
