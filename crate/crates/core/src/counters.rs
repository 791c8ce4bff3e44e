//! Operation counters shared by every inference strategy.
//!
//! Complexity checks in this crate are made on counted arithmetic rather than
//! wall-clock time. A matrix-vector product of an `r x c` matrix counts as
//! `r * c` scalar mult-adds, a matrix-matrix product `r x n` by `n x c` counts
//! `r * n * c`, and a componentwise product of length `k` counts `k`.

use std::ops::{Add, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// A snapshot of counted work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub matrix_vector_mults: u64,
    pub matrix_matrix_mults: u64,
    pub equation_evals: u64,
    pub scalar_mult_adds: u64,
}

impl Add for OpCounters {
    type Output = OpCounters;
    fn add(self, o: OpCounters) -> OpCounters {
        OpCounters {
            matrix_vector_mults: self.matrix_vector_mults + o.matrix_vector_mults,
            matrix_matrix_mults: self.matrix_matrix_mults + o.matrix_matrix_mults,
            equation_evals: self.equation_evals + o.equation_evals,
            scalar_mult_adds: self.scalar_mult_adds + o.scalar_mult_adds,
        }
    }
}

impl Sub for OpCounters {
    type Output = OpCounters;
    fn sub(self, o: OpCounters) -> OpCounters {
        OpCounters {
            matrix_vector_mults: self.matrix_vector_mults - o.matrix_vector_mults,
            matrix_matrix_mults: self.matrix_matrix_mults - o.matrix_matrix_mults,
            equation_evals: self.equation_evals - o.equation_evals,
            scalar_mult_adds: self.scalar_mult_adds - o.scalar_mult_adds,
        }
    }
}

/// Matrix product shapes used by the factored join-tree pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactoredShape {
    /// `L x K` times `K x L`.
    LkByKl,
    /// `L x K` times a `K x K` diagonal.
    LkByDiag,
    /// `L x L` times `L x K`.
    LlByLk,
    /// `L x K` (or its transpose) times a vector.
    LkByVec,
}

/// Per-shape product counts recorded by the factored pipeline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ShapeCounts {
    pub lk_by_kl: u64,
    pub lk_by_diag: u64,
    pub ll_by_lk: u64,
    pub lk_by_vec: u64,
}

/// Thread-safe accumulator behind every counted operation.
///
/// Read-only queries take `&self` on their engines and may run concurrently,
/// so the counters are atomics updated with relaxed ordering.
#[derive(Debug, Default)]
pub struct OpRecorder {
    matrix_vector_mults: AtomicU64,
    matrix_matrix_mults: AtomicU64,
    equation_evals: AtomicU64,
    scalar_mult_adds: AtomicU64,
    shapes: [AtomicU64; 4],
}

impl OpRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> OpCounters {
        OpCounters {
            matrix_vector_mults: self.matrix_vector_mults.load(Ordering::Relaxed),
            matrix_matrix_mults: self.matrix_matrix_mults.load(Ordering::Relaxed),
            equation_evals: self.equation_evals.load(Ordering::Relaxed),
            scalar_mult_adds: self.scalar_mult_adds.load(Ordering::Relaxed),
        }
    }

    pub fn shape_counts(&self) -> ShapeCounts {
        ShapeCounts {
            lk_by_kl: self.shapes[0].load(Ordering::Relaxed),
            lk_by_diag: self.shapes[1].load(Ordering::Relaxed),
            ll_by_lk: self.shapes[2].load(Ordering::Relaxed),
            lk_by_vec: self.shapes[3].load(Ordering::Relaxed),
        }
    }

    pub fn mat_vec(&self, rows: usize, cols: usize) {
        self.matrix_vector_mults.fetch_add(1, Ordering::Relaxed);
        self.mult_adds((rows * cols) as u64);
    }

    pub fn mat_mat(&self, rows: usize, inner: usize, cols: usize) {
        self.matrix_matrix_mults.fetch_add(1, Ordering::Relaxed);
        self.mult_adds((rows * inner * cols) as u64);
    }

    pub fn equation(&self) {
        self.equation_evals.fetch_add(1, Ordering::Relaxed);
    }

    pub fn mult_adds(&self, n: u64) {
        self.scalar_mult_adds.fetch_add(n, Ordering::Relaxed);
    }

    pub fn shape(&self, shape: FactoredShape) {
        let i = match shape {
            FactoredShape::LkByKl => 0,
            FactoredShape::LkByDiag => 1,
            FactoredShape::LlByLk => 2,
            FactoredShape::LkByVec => 3,
        };
        self.shapes[i].fetch_add(1, Ordering::Relaxed);
    }
}

impl Clone for OpRecorder {
    fn clone(&self) -> Self {
        let r = OpRecorder::new();
        let s = self.snapshot();
        r.matrix_vector_mults.store(s.matrix_vector_mults, Ordering::Relaxed);
        r.matrix_matrix_mults.store(s.matrix_matrix_mults, Ordering::Relaxed);
        r.equation_evals.store(s.equation_evals, Ordering::Relaxed);
        r.scalar_mult_adds.store(s.scalar_mult_adds, Ordering::Relaxed);
        for (dst, src) in r.shapes.iter().zip(self.shapes.iter()) {
            dst.store(src.load(Ordering::Relaxed), Ordering::Relaxed);
        }
        r
    }
}
