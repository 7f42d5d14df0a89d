use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Dense Cholesky factor of the coarsest operator with the constant nullspace
/// pinned: `A + α/n · 11ᵀ` is SPD and, for zero-mean loads, its solution is
/// the zero-mean solution of `A x = b`.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    lower: Vec<f64>,
}

/// Outcome of a coarse solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoarseReport {
    /// Mean removed from an incompatible load.
    pub removed_mean: f64,
}

impl DenseCholesky {
    /// Factorises the row-major `n×n` matrix after pinning its constant mode.
    pub fn factor_pinned(matrix: &[f64], n: usize) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::ShapeMismatch {
                expected: n * n,
                actual: matrix.len(),
            });
        }
        let alpha = (0..n).map(|i| matrix[i * n + i]).sum::<f64>() / n as f64;
        let pin = alpha / n as f64;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = matrix[i * n + j] + pin;
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    let tol = 1e-13 * alpha.abs().max(f64::MIN_POSITIVE);
                    if !(s > tol) {
                        return Err(Error::SolverFailure(format!(
                            "coarse matrix is singular beyond its constant nullspace (pivot {s:.3e} at row {i})"
                        )));
                    }
                    l[i * n + i] = math::sqrt(s);
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(DenseCholesky { n, lower: l })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Solves in place; the load is first projected to zero mean.
    pub fn solve(&self, x: &mut [f64]) -> CoarseReport {
        let n = self.n;
        let removed_mean = math::project_zero_mean(x);
        if removed_mean.abs() > 1e-12 * math::norm(x).max(1.0) {
            log::warn!("coarse load had nonzero mean {removed_mean:.3e}; projected out");
        }
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        math::project_zero_mean(x);
        CoarseReport { removed_mean }
    }
}
