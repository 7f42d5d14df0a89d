//! Density updates, the adaptive volume bound and the optimization loop.

mod driver;
mod governor;
mod mma;
mod oc;

pub use driver::{
    run_optimization, AdaptiveMove, IterationRecord, Model, Optimizer, RunConfig, RunOutcome, StopReason, Symmetry,
    ALREADY_OPTIMAL,
};
pub use governor::{GovernorEvent, GovernorParams, GovernorState};
pub use mma::{Mma, MmaEval, MmaParams, MMA_MAX_VARIABLES};
pub use oc::{oc_candidate, oc_update, oc_update_limited, unconstrained_step, MoveBox, OcParams, OcStep, EPS_B};
