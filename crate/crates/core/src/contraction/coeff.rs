use std::fmt::Debug;

use crate::counters::OpRecorder;
use crate::linalg::Matrix;

/// A coefficient matrix as stored by the contraction index.
///
/// The structural part of contraction never looks inside a coefficient; it
/// only applies it to vectors and composes it during a rake. Dense matrices
/// and the factored join-tree form both implement this.
pub trait Coefficient: Clone + Debug + Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `self · v`
    fn apply(&self, v: &[f64], rec: &OpRecorder) -> Vec<f64>;

    /// `selfᵀ · w`
    fn apply_transpose(&self, w: &[f64], rec: &OpRecorder) -> Vec<f64>;

    /// `outer · Diag_{leaf · λ} · inner`, the coefficient left behind when a
    /// leaf with likelihood `λ` and its parent are raked away.
    fn rake(outer: &Self, leaf: &Self, lambda: &[f64], inner: &Self, rec: &OpRecorder) -> Self;

    /// Dense copy, for tests and diagnostics.
    fn materialize(&self) -> Matrix;

    /// Adds `delta` to entry `(0, 0)`. Only for fault-injection tests.
    #[doc(hidden)]
    fn perturb_first(&mut self, delta: f64);
}

impl Coefficient for Matrix {
    fn rows(&self) -> usize {
        Matrix::rows(self)
    }

    fn cols(&self) -> usize {
        Matrix::cols(self)
    }

    fn apply(&self, v: &[f64], rec: &OpRecorder) -> Vec<f64> {
        self.mul_vec(v, rec)
    }

    fn apply_transpose(&self, w: &[f64], rec: &OpRecorder) -> Vec<f64> {
        self.tmul_vec(w, rec)
    }

    fn rake(outer: &Self, leaf: &Self, lambda: &[f64], inner: &Self, rec: &OpRecorder) -> Self {
        let d = leaf.mul_vec(lambda, rec);
        outer.mul_diag(&d, rec).matmul(inner, rec)
    }

    fn materialize(&self) -> Matrix {
        self.clone()
    }

    fn perturb_first(&mut self, delta: f64) {
        self.set(0, 0, self.get(0, 0) + delta);
    }
}
