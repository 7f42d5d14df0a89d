//! Matrix-free periodic conduction operator and geometric multigrid.
//!
//! Every level stores one scalar conductivity weight per element and a scaled
//! box template; the operator is never assembled except on the coarsest grid,
//! which is factorised densely. The periodic system is singular (constant
//! temperatures), so loads and iterates are kept in the zero-mean subspace.

mod coarse;
mod level;
mod multigrid;
mod transfer;

pub use coarse::{CoarseReport, DenseCholesky};
pub use level::{color_of, GridLevel};
pub use multigrid::{plan_levels, GridHierarchy, SolveStats, COARSE_TARGET, COARSE_LIMIT};
pub use transfer::{prolong_add, restrict, Transfer};

/// Outer iteration used by [`GridHierarchy::solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Stationary V-cycle iteration.
    VCycle,
    /// Conjugate gradients preconditioned by one symmetric V-cycle.
    Pcg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual `‖f − KT‖ / ‖f‖` to reach.
    pub tol: f64,
    pub max_cycles: usize,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub method: SolverMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_cycles: 200,
            pre_sweeps: 1,
            post_sweeps: 1,
            method: SolverMethod::Pcg,
        }
    }
}
