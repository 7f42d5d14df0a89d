//! Inverse homogenization of periodic thermal microstructures.
//!
//! A voxel density field on a periodic unit cell is mapped through a radial
//! density filter and SIMP interpolation to per-element conductivities. The
//! homogenized conductivity tensor is obtained from three unit-gradient load
//! cases solved with a matrix-free geometric multigrid, and the design is
//! driven toward a target tensor by an optimality-criteria update with an
//! adaptive volume bound (or by MMA for the minimum-volume formulation).
//!
//! The crate is `no_std` and only needs `alloc`; file formats, timing and the
//! command-line driver live in the companion `opentm` crate.

#![no_std]

extern crate alloc;

pub mod element;
pub mod error;
pub mod field;
pub mod grid;
pub mod homogenize;
pub mod objective;
pub mod optimize;
pub mod solver;
pub mod tensor;

mod math;

pub use element::{ElementTemplates, MaterialParams};
pub use error::{Error, Result};
pub use field::{DensityField, Filter, FilterSpec, InitKind, InitPattern, Kernel};
pub use grid::Dims;
pub use homogenize::{HomogenizationResult, Homogenizer};
pub use objective::{feasibility_check, Feasibility, ObjectiveKind, ObjectiveSpec};
pub use optimize::{
    run_optimization, GovernorState, IterationRecord, Model, OcParams, Optimizer, RunConfig, RunOutcome,
    StopReason, Symmetry,
};
pub use solver::{SolverConfig, SolverMethod};
pub use tensor::ConductivityTensor;
