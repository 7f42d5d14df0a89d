//! Method of moving asymptotes for box-bounded problems with a handful of
//! inequality constraints `g_i(x) ≤ 0`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Largest number of design variables accepted (a 64³ grid).
pub const MMA_MAX_VARIABLES: usize = 64 * 64 * 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmaParams {
    /// Initial asymptote distance relative to the box width.
    pub asy_init: f64,
    pub asy_incr: f64,
    pub asy_decr: f64,
    /// Closest an asymptote may get to the current point, relative to the
    /// box width. This also bounds how finely the iterates can settle.
    pub asy_min: f64,
    /// Move limit relative to the box width.
    pub move_limit: f64,
    /// Penalty on the elastic variables of the constraints.
    pub c: f64,
}

impl Default for MmaParams {
    fn default() -> Self {
        MmaParams {
            asy_init: 0.5,
            asy_incr: 1.2,
            asy_decr: 0.7,
            asy_min: 1e-5,
            move_limit: 0.2,
            c: 1000.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mma {
    n: usize,
    m: usize,
    xmin: Vec<f64>,
    xmax: Vec<f64>,
    xold1: Vec<f64>,
    xold2: Vec<f64>,
    low: Vec<f64>,
    upp: Vec<f64>,
    iter: usize,
    pub params: MmaParams,
}

/// Objective and constraint values with their gradients at the current point.
pub struct MmaEval<'a> {
    pub f0: f64,
    pub df0: &'a [f64],
    pub g: &'a [f64],
    /// One gradient row per constraint.
    pub dg: &'a [Vec<f64>],
}

struct Approx {
    p0: Vec<f64>,
    q0: Vec<f64>,
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    b: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Mma {
    pub fn new(n: usize, m: usize, xmin: Vec<f64>, xmax: Vec<f64>, params: MmaParams) -> Result<Self> {
        if n > MMA_MAX_VARIABLES {
            return Err(Error::invalid(format!(
                "MMA is limited to {MMA_MAX_VARIABLES} variables (64^3); got {n}. Use the OC model for larger grids"
            )));
        }
        if xmin.len() != n || xmax.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                actual: xmin.len().min(xmax.len()),
            });
        }
        if xmin.iter().zip(&xmax).any(|(a, b)| !(a < b)) {
            return Err(Error::invalid("MMA bounds need xmin < xmax"));
        }
        Ok(Mma {
            n,
            m,
            xmin,
            xmax,
            xold1: Vec::new(),
            xold2: Vec::new(),
            low: vec![0.0; n],
            upp: vec![0.0; n],
            iter: 0,
            params,
        })
    }

    pub fn iterations(&self) -> usize {
        self.iter
    }

    pub fn asymptotes(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.upp)
    }

    /// Replaces `x` by the minimizer of the convex approximation built at `x`.
    pub fn update(&mut self, x: &mut [f64], eval: &MmaEval<'_>) -> Result<()> {
        let (n, m) = (self.n, self.m);
        if x.len() != n || eval.df0.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        if eval.g.len() != m || eval.dg.len() != m || eval.dg.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("constraint count or gradient shape does not match"));
        }
        self.iter += 1;
        self.move_asymptotes(x);
        let approx = self.approximate(x, eval);
        let lambda = self.solve_dual(&approx);
        let xnew = self.primal(&approx, &lambda);
        self.xold2 = core::mem::replace(&mut self.xold1, x.to_vec());
        x.copy_from_slice(&xnew);
        Ok(())
    }

    fn move_asymptotes(&mut self, x: &[f64]) {
        let p = self.params;
        for j in 0..self.n {
            let w = self.xmax[j] - self.xmin[j];
            if self.iter <= 2 {
                self.low[j] = x[j] - p.asy_init * w;
                self.upp[j] = x[j] + p.asy_init * w;
            } else {
                let s = (x[j] - self.xold1[j]) * (self.xold1[j] - self.xold2[j]);
                let factor = if s > 0.0 {
                    p.asy_incr
                } else if s < 0.0 {
                    p.asy_decr
                } else {
                    1.0
                };
                self.low[j] = x[j] - factor * (self.xold1[j] - self.low[j]);
                self.upp[j] = x[j] + factor * (self.upp[j] - self.xold1[j]);
                self.low[j] = self.low[j].clamp(x[j] - 10.0 * w, x[j] - p.asy_min * w);
                self.upp[j] = self.upp[j].clamp(x[j] + p.asy_min * w, x[j] + 10.0 * w);
            }
        }
    }

    fn approximate(&self, x: &[f64], eval: &MmaEval<'_>) -> Approx {
        let n = self.n;
        let raa0 = 1e-5;
        let split = |d: f64, w: f64, ux: f64, xl: f64| {
            let pos = d.max(0.0);
            let neg = (-d).max(0.0);
            let reg = raa0 / w;
            (
                ux * ux * (1.001 * pos + 0.001 * neg + reg),
                xl * xl * (0.001 * pos + 1.001 * neg + reg),
            )
        };
        let mut a = Approx {
            p0: vec![0.0; n],
            q0: vec![0.0; n],
            p: vec![vec![0.0; n]; self.m],
            q: vec![vec![0.0; n]; self.m],
            b: vec![0.0; self.m],
            alpha: vec![0.0; n],
            beta: vec![0.0; n],
        };
        let mut rsum = vec![vec![0.0; n]; self.m];
        for j in 0..n {
            let w = self.xmax[j] - self.xmin[j];
            let ux = self.upp[j] - x[j];
            let xl = x[j] - self.low[j];
            a.alpha[j] = self
                .xmin[j]
                .max(self.low[j] + 0.1 * xl)
                .max(x[j] - self.params.move_limit * w);
            a.beta[j] = self
                .xmax[j]
                .min(self.upp[j] - 0.1 * ux)
                .min(x[j] + self.params.move_limit * w);
            let (p0, q0) = split(eval.df0[j], w, ux, xl);
            a.p0[j] = p0;
            a.q0[j] = q0;
            for i in 0..self.m {
                let (pi, qi) = split(eval.dg[i][j], w, ux, xl);
                a.p[i][j] = pi;
                a.q[i][j] = qi;
                rsum[i][j] = pi / ux + qi / xl;
            }
        }
        for i in 0..self.m {
            a.b[i] = math::pairwise_sum(&rsum[i]) - eval.g[i];
        }
        a
    }

    fn primal(&self, a: &Approx, lambda: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                let mut pj = a.p0[j];
                let mut qj = a.q0[j];
                for i in 0..self.m {
                    pj += lambda[i] * a.p[i][j];
                    qj += lambda[i] * a.q[i][j];
                }
                let (sp, sq) = (math::sqrt(pj), math::sqrt(qj));
                let x = (sp * self.low[j] + sq * self.upp[j]) / (sp + sq);
                x.clamp(a.alpha[j], a.beta[j])
            })
            .collect()
    }

    /// `∂W/∂λ_i`, the violation of constraint `i` in the approximation.
    fn dual_gradient(&self, a: &Approx, lambda: &[f64], i: usize) -> f64 {
        let x = self.primal(a, lambda);
        let terms: Vec<f64> = (0..self.n)
            .map(|j| a.p[i][j] / (self.upp[j] - x[j]) + a.q[i][j] / (x[j] - self.low[j]))
            .collect();
        let y = (lambda[i] - self.params.c).max(0.0);
        math::pairwise_sum(&terms) - a.b[i] - y
    }

    /// Cyclic coordinate ascent on the concave dual, each coordinate by
    /// bisection on its partial derivative.
    fn solve_dual(&self, a: &Approx) -> Vec<f64> {
        let mut lambda = vec![0.0; self.m];
        for _sweep in 0..if self.m > 1 { 50 } else { 1 } {
            let mut moved = 0.0f64;
            for i in 0..self.m {
                let old = lambda[i];
                lambda[i] = 0.0;
                if self.dual_gradient(a, &lambda, i) <= 0.0 {
                    moved = moved.max(old);
                    continue;
                }
                let mut hi = 1.0;
                loop {
                    lambda[i] = hi;
                    if self.dual_gradient(a, &lambda, i) <= 0.0 || hi > 1e12 {
                        break;
                    }
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    lambda[i] = mid;
                    if self.dual_gradient(a, &lambda, i) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-12 * hi.max(1.0) {
                        break;
                    }
                }
                lambda[i] = 0.5 * (lo + hi);
                moved = moved.max((lambda[i] - old).abs());
            }
            if moved < 1e-10 {
                break;
            }
        }
        lambda
    }
}
