//! Dense symmetric positive-definite matrices and the few decompositions the
//! learners need.
//!
//! Every Gram matrix in this crate has the form `V = λI + Σ xxᵀ` with `λ > 0`,
//! so Cholesky factorization always succeeds on well-posed inputs and is the
//! backbone for solves and log-determinants. Factorizations are rebuilt from
//! scratch per solve; at the dimensions this engine runs (d ≤ 25) an O(d³)
//! factorization per round is cheaper than maintaining incremental factors and
//! has no accumulated drift.
//!
//! Eigenvalues come from the cyclic Jacobi iteration, which is exact enough at
//! these sizes and keeps the crate dependency-free on the numerics side.

use thiserror::Error;

/// Errors from matrix factorizations and solves.
#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    /// Cholesky hit a non-positive pivot: the matrix is not positive definite.
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    /// Operand shapes disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Dense symmetric matrix stored row-major; constructors keep it symmetric,
/// and the SPD-only operations report when positive definiteness fails.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    dim: usize,
    a: Vec<f64>,
}

impl SpdMatrix {
    /// λ·I — the ridge prior every Gram matrix starts from.
    pub fn scaled_identity(dim: usize, lambda: f64) -> Self {
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = lambda;
        }
        Self { dim, a }
    }

    /// Build from explicit entries; the caller asserts symmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        let mut a = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(LinalgError::DimensionMismatch { expected: dim, got: row.len() });
            }
            a.extend_from_slice(row);
        }
        Ok(Self { dim, a })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.dim + j]
    }

    /// Rank-one update `A ← A + xxᵀ`, the per-round Gram accumulation.
    pub fn rank_one_update(&mut self, x: &[f64]) -> Result<(), LinalgError> {
        if x.len() != self.dim {
            return Err(LinalgError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.a[i * self.dim + j] += x[i] * x[j];
            }
        }
        Ok(())
    }

    /// Lower-triangular Cholesky factor L with `A = LLᵀ`.
    pub fn cholesky(&self) -> Result<Cholesky, LinalgError> {
        let d = self.dim;
        let mut l = vec![0.0f64; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.a[i * d + j];
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(LinalgError::NotPositiveDefinite { index: i, pivot: s });
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Ok(Cholesky { dim: d, l })
    }

    /// Solve `A·x = b` by factoring once.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.dim {
            return Err(LinalgError::DimensionMismatch { expected: self.dim, got: b.len() });
        }
        Ok(self.cholesky()?.solve(b))
    }

    /// log det A via the Cholesky diagonal: `2·Σ ln Lᵢᵢ`.
    pub fn log_det(&self) -> Result<f64, LinalgError> {
        Ok(self.cholesky()?.log_det())
    }

    /// Smallest eigenvalue by cyclic Jacobi rotations on a working copy.
    ///
    /// For ridge Gram matrices this is bounded below by λ; the routine itself
    /// only needs symmetry.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim;
        if d == 1 {
            return self.a[0];
        }
        let mut m = self.a.clone();
        // Sweep until the off-diagonal mass is negligible relative to the
        // matrix scale; 30 sweeps is far beyond what d ≤ 64 needs.
        let scale: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        for _ in 0..30 {
            let mut off = 0.0;
            for p in 0..d {
                for q in (p + 1)..d {
                    off += m[p * d + q] * m[p * d + q];
                }
            }
            if off.sqrt() <= 1e-14 * scale {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = m[p * d + q];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let app = m[p * d + p];
                    let aqq = m[q * d + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = m[k * d + p];
                        let akq = m[k * d + q];
                        m[k * d + p] = c * akp - s * akq;
                        m[k * d + q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = m[p * d + k];
                        let aqk = m[q * d + k];
                        m[p * d + k] = c * apk - s * aqk;
                        m[q * d + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..d).map(|i| m[i * d + i]).fold(f64::INFINITY, f64::min)
    }

    /// Quadratic form `xᵀAx`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.a[i * d + j] * x[j];
            }
            s += x[i] * row;
        }
        s
    }
}

/// Cached lower-triangular Cholesky factor, reusable across several
/// right-hand sides within one arm-selection pass.
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Solve `LLᵀx = b` by forward then backward substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y = b.to_vec();
        for i in 0..d {
            for k in 0..i {
                y[i] -= self.l[i * d + k] * y[k];
            }
            y[i] /= self.l[i * d + i];
        }
        for i in (0..d).rev() {
            for k in (i + 1)..d {
                y[i] -= self.l[k * d + i] * y[k];
            }
            y[i] /= self.l[i * d + i];
        }
        y
    }

    pub fn log_det(&self) -> f64 {
        let d = self.dim;
        2.0 * (0..d).map(|i| self.l[i * d + i].ln()).sum::<f64>()
    }
}

/// ⟨a, b⟩.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance ‖a − b‖.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
