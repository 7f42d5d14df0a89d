use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::coarse::{CoarseReport, DenseCholesky};
use super::level::GridLevel;
use super::transfer::Transfer;
use super::{SolverConfig, SolverMethod};
use crate::error::{Error, Result};
use crate::grid::Dims;
use crate::math;

/// Coarsening stops once a level has at most this many vertices.
pub const COARSE_TARGET: usize = 64;
/// Largest coarsest grid accepted for the dense direct solve.
pub const COARSE_LIMIT: usize = 1024;

/// Level dimensions, element edge lengths and operator scale, finest first.
///
/// Each step halves every axis that is even and at least 4; other axes keep
/// their size. Grids whose coarsest level would exceed [`COARSE_LIMIT`]
/// vertices are rejected.
pub fn plan_levels(dims: Dims) -> Result<Vec<(Dims, [f64; 3], f64)>> {
    let mut out = vec![(dims, [1.0; 3], 1.0)];
    loop {
        let (d, cell, scale) = *out.last().unwrap();
        if d.len() <= COARSE_TARGET {
            break;
        }
        let a = d.as_array();
        let halve: [bool; 3] = a.map(|n| n % 2 == 0 && n >= 4);
        if !halve.iter().any(|&h| h) {
            break;
        }
        let mut next = a;
        let mut next_cell = cell;
        let mut next_scale = scale;
        for ax in 0..3 {
            if halve[ax] {
                next[ax] /= 2;
                next_cell[ax] *= 2.0;
                next_scale *= 0.5;
            }
        }
        out.push((Dims::from_array(next), next_cell, next_scale));
    }
    let coarsest = out.last().unwrap().0;
    if coarsest.len() > COARSE_LIMIT {
        return Err(Error::invalid(format!(
            "grid {}x{}x{} coarsens only to {}x{}x{} ({} vertices > {COARSE_LIMIT}); \
             use dimensions with more factors of two",
            dims.nx, dims.ny, dims.nz, coarsest.nx, coarsest.ny, coarsest.nz, coarsest.len()
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// V-cycles (or preconditioned CG iterations) performed.
    pub cycles: usize,
    /// Final relative residual.
    pub residual: f64,
    /// Relative residual before the first cycle and after each cycle.
    pub history: Vec<f64>,
}

impl SolveStats {
    /// Geometric-mean residual reduction per cycle.
    pub fn mean_contraction(&self) -> f64 {
        match (self.history.first(), self.history.last()) {
            (Some(&a), Some(&b)) if self.cycles > 0 && a > 0.0 => {
                math::powf(b / a, 1.0 / self.cycles as f64)
            }
            _ => 0.0,
        }
    }
}

/// Multigrid levels from finest (0) to coarsest, with the coarsest operator
/// factorised.
#[derive(Debug, Clone)]
pub struct GridHierarchy {
    levels: Vec<GridLevel>,
    transfers: Vec<Transfer>,
    coarse: Option<DenseCholesky>,
    pub config: SolverConfig,
    scratch: Vec<f64>,
}

impl GridHierarchy {
    pub fn new(dims: Dims, config: SolverConfig) -> Result<Self> {
        let plan = plan_levels(dims)?;
        let levels: Vec<GridLevel> = plan
            .iter()
            .map(|&(d, cell, scale)| GridLevel::new(d, cell, scale))
            .collect();
        let transfers = plan
            .windows(2)
            .map(|w| Transfer::new(w[0].0, w[1].0))
            .collect();
        Ok(GridHierarchy {
            levels,
            transfers,
            coarse: None,
            config,
            scratch: vec![0.0; dims.len()],
        })
    }

    pub fn dims(&self) -> Dims {
        self.levels[0].dims()
    }

    pub fn levels(&self) -> &[GridLevel] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &GridLevel {
        &self.levels[l]
    }

    pub fn transfer(&self, l: usize) -> &Transfer {
        &self.transfers[l]
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Installs finest-level element weights, rediscretises coarser levels
    /// with child-averaged weights and refactorises the coarsest operator.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        self.levels[0].set_weights(weights)?;
        for l in 0..self.transfers.len() {
            let coarse = self.transfers[l].coarsen_weights(&self.levels[l].weights);
            self.levels[l + 1].set_weights(&coarse)?;
        }
        let last = self.levels.last().unwrap();
        let dense = last.assemble_dense();
        self.coarse = Some(DenseCholesky::factor_pinned(&dense, last.dims().len())?);
        Ok(())
    }

    /// Fine-level `out = K x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.levels[0].apply(x, out)
    }

    /// Solves the coarsest level in place (`t = A⁻¹ f`).
    pub fn coarse_solve(&mut self) -> Result<CoarseReport> {
        let chol = self
            .coarse
            .as_ref()
            .ok_or_else(|| Error::State("weights not set".into()))?;
        let last = self.levels.last_mut().unwrap();
        last.t.copy_from_slice(&last.f);
        Ok(chol.solve(&mut last.t))
    }

    /// One V-cycle on the finest level's `f` and `t`.
    pub fn vcycle(&mut self) -> Result<()> {
        let nl = self.levels.len();
        let (pre, post) = (self.config.pre_sweeps, self.config.post_sweeps);
        for l in 0..nl - 1 {
            let (head, tail) = self.levels.split_at_mut(l + 1);
            let fine = &mut head[l];
            let coarse = &mut tail[0];
            if l > 0 {
                fine.t.iter_mut().for_each(|v| *v = 0.0);
            }
            for _ in 0..pre {
                fine.relax(false);
            }
            fine.update_residual();
            self.transfers[l].restrict(&fine.r, &mut coarse.f);
            math::project_zero_mean(&mut coarse.f);
        }
        self.coarse_solve()?;
        for l in (0..nl - 1).rev() {
            let (head, tail) = self.levels.split_at_mut(l + 1);
            let fine = &mut head[l];
            self.transfers[l].prolong_add(&tail[0].t, &mut fine.t);
            for _ in 0..post {
                fine.relax(true);
            }
        }
        math::project_zero_mean(&mut self.levels[0].t);
        Ok(())
    }

    /// Applies one V-cycle to `r` from a zero initial guess.
    fn precondition(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let fine = &mut self.levels[0];
        fine.f.copy_from_slice(r);
        math::project_zero_mean(&mut fine.f);
        fine.t.iter_mut().for_each(|v| *v = 0.0);
        self.vcycle()?;
        z.copy_from_slice(&self.levels[0].t);
        Ok(())
    }

    /// Solves `K t = f` in the zero-mean subspace, using `t` as the initial
    /// guess.
    pub fn solve(&mut self, f: &[f64], t: &mut [f64]) -> Result<SolveStats> {
        let n = self.dims().len();
        if f.len() != n || t.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                actual: f.len().min(t.len()),
            });
        }
        if self.coarse.is_none() {
            return Err(Error::State("weights not set".into()));
        }
        let mut rhs = f.to_vec();
        math::project_zero_mean(&mut rhs);
        let fnorm = math::norm(&rhs);
        if fnorm == 0.0 {
            t.iter_mut().for_each(|v| *v = 0.0);
            return Ok(SolveStats {
                cycles: 0,
                residual: 0.0,
                history: vec![0.0],
            });
        }
        math::project_zero_mean(t);
        match self.config.method {
            SolverMethod::VCycle => self.solve_stationary(&rhs, fnorm, t),
            SolverMethod::Pcg => self.solve_pcg(&rhs, fnorm, t),
        }
    }

    fn residual_into(&mut self, rhs: &[f64], t: &[f64], r: &mut [f64]) -> f64 {
        let mut kt = core::mem::take(&mut self.scratch);
        self.levels[0].apply(t, &mut kt);
        for ((ri, fi), ki) in r.iter_mut().zip(rhs).zip(&kt) {
            *ri = fi - ki;
        }
        self.scratch = kt;
        math::norm(r)
    }

    fn solve_stationary(&mut self, rhs: &[f64], fnorm: f64, t: &mut [f64]) -> Result<SolveStats> {
        let tol = self.config.tol;
        let mut r = vec![0.0; rhs.len()];
        let mut rel = self.residual_into(rhs, t, &mut r) / fnorm;
        let mut stats = SolveStats {
            cycles: 0,
            residual: rel,
            history: vec![rel],
        };
        while rel > tol {
            if stats.cycles >= self.config.max_cycles {
                return Err(Error::Convergence {
                    cycles: stats.cycles,
                    residual: rel,
                });
            }
            let fine = &mut self.levels[0];
            fine.f.copy_from_slice(rhs);
            fine.t.copy_from_slice(t);
            self.vcycle()?;
            t.copy_from_slice(&self.levels[0].t);
            rel = self.residual_into(rhs, t, &mut r) / fnorm;
            stats.cycles += 1;
            stats.residual = rel;
            stats.history.push(rel);
        }
        Ok(stats)
    }

    fn solve_pcg(&mut self, rhs: &[f64], fnorm: f64, x: &mut [f64]) -> Result<SolveStats> {
        let tol = self.config.tol;
        let n = rhs.len();
        let mut r = vec![0.0; n];
        let mut rel = self.residual_into(rhs, x, &mut r) / fnorm;
        let mut stats = SolveStats {
            cycles: 0,
            residual: rel,
            history: vec![rel],
        };
        if rel <= tol {
            return Ok(stats);
        }
        let mut z = vec![0.0; n];
        let mut q = vec![0.0; n];
        self.precondition(&r, &mut z)?;
        let mut p = z.clone();
        let mut rz = math::dot(&r, &z);
        loop {
            if stats.cycles >= self.config.max_cycles {
                return Err(Error::Convergence {
                    cycles: stats.cycles,
                    residual: rel,
                });
            }
            self.levels[0].apply(&p, &mut q);
            let pq = math::dot(&p, &q);
            if !(pq > 0.0) || !(rz > 0.0) {
                // Krylov space exhausted at round-off level
                break;
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            math::project_zero_mean(&mut r);
            rel = math::norm(&r) / fnorm;
            stats.cycles += 1;
            stats.residual = rel;
            stats.history.push(rel);
            if rel <= tol {
                break;
            }
            self.precondition(&r, &mut z)?;
            let rz_new = math::dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        math::project_zero_mean(x);
        // report the true residual rather than the recursively updated one
        let true_rel = self.residual_into(rhs, x, &mut r) / fnorm;
        stats.residual = true_rel;
        if let Some(last) = stats.history.last_mut() {
            *last = true_rel;
        }
        if true_rel > tol * 10.0 {
            return Err(Error::Convergence {
                cycles: stats.cycles,
                residual: true_rel,
            });
        }
        Ok(stats)
    }
}
