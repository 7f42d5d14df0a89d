//! The design loop as an explicit stepper.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::element::MaterialParams;
use crate::error::{Error, Result};
use crate::field::{init_density, symmetrize_values, DensityField, Filter, FilterSpec, InitKind, InitPattern};
use crate::grid::Dims;
use crate::homogenize::Homogenizer;
use crate::math;
use crate::objective::ObjectiveSpec;
use crate::optimize::governor::{GovernorEvent, GovernorParams, GovernorState};
use crate::optimize::mma::{Mma, MmaEval, MmaParams};
use crate::optimize::oc::{oc_update_limited, OcParams};
use crate::solver::SolverConfig;
use crate::tensor::ConductivityTensor;

/// Objective value below which the initial design is accepted as is.
pub const ALREADY_OPTIMAL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Minimize the mismatch under the adaptive volume bound `V*`.
    AdaptiveOC,
    /// Minimize volume subject to `g ≤ ε`.
    MinVolumeMMA,
    /// Minimize the mismatch under a fixed volume bound.
    FixedVolumeOC,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::AdaptiveOC => "oc",
            Model::MinVolumeMMA => "mma",
            Model::FixedVolumeOC => "fixed",
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oc" => Ok(Model::AdaptiveOC),
            "mma" => Ok(Model::MinVolumeMMA),
            "fixed" => Ok(Model::FixedVolumeOC),
            other => Err(Error::invalid(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    None,
    /// `ρ(i, j, k) = ρ(nx−1−i, ny−1−j, nz−1−k)`.
    Central,
}

impl Symmetry {
    pub fn name(&self) -> &'static str {
        match self {
            Symmetry::None => "none",
            Symmetry::Central => "central",
        }
    }
}

impl FromStr for Symmetry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Symmetry::None),
            "central" => Ok(Symmetry::Central),
            other => Err(Error::invalid(format!("unknown symmetry '{other}'"))),
        }
    }
}

/// Per-element move limits that shrink when an element reverses direction
/// and grow back while it keeps moving the same way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveMove {
    pub shrink: f64,
    pub grow: f64,
    /// Smallest limit as a fraction of `step_limit`.
    pub floor: f64,
}

impl Default for AdaptiveMove {
    fn default() -> Self {
        AdaptiveMove {
            shrink: 0.7,
            grow: 1.2,
            floor: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dims: Dims,
    pub material: MaterialParams,
    pub filter: FilterSpec,
    pub objective: ObjectiveSpec,
    pub init: InitPattern,
    pub model: Model,
    pub max_iter: usize,
    /// Objective change regarded as stalled.
    pub conv_threshold: f64,
    /// Stalled iterations required to stop.
    pub conv_window: usize,
    pub symmetry: Symmetry,
    pub solver: SolverConfig,
    pub oc: OcParams,
    /// `None` keeps the move limit fixed at `oc.step_limit`.
    pub adaptive_move: Option<AdaptiveMove>,
    pub governor: GovernorParams,
    /// Volume bound of the fixed-volume model.
    pub volfrac: f64,
    /// Apply sensitivity smoothing before the OC update. Off by default: it
    /// makes OC oscillate between two states, which stalls the governor.
    pub smooth_sensitivity: bool,
    pub mma: MmaParams,
    /// Objective tolerance `ε` of the minimum-volume model.
    pub mma_epsilon: f64,
}

impl RunConfig {
    pub fn new(dims: Dims, objective: ObjectiveSpec) -> Self {
        RunConfig {
            dims,
            material: MaterialParams::default(),
            filter: FilterSpec::default(),
            objective,
            init: InitPattern::new(InitKind::Iwp, 0.5),
            model: Model::AdaptiveOC,
            max_iter: 500,
            conv_threshold: 1e-4,
            conv_window: 3,
            symmetry: Symmetry::None,
            solver: SolverConfig::default(),
            oc: OcParams::default(),
            adaptive_move: Some(AdaptiveMove::default()),
            governor: GovernorParams::default(),
            volfrac: 0.5,
            smooth_sensitivity: false,
            mma: MmaParams::default(),
            mma_epsilon: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if self.conv_window == 0 {
            return Err(Error::invalid("conv_window must be at least 1"));
        }
        if !(self.conv_threshold >= 0.0) {
            return Err(Error::invalid("conv_threshold must be non-negative"));
        }
        if !(self.volfrac > 0.0 && self.volfrac <= 1.0) {
            return Err(Error::invalid(format!("volfrac {} must lie in (0, 1]", self.volfrac)));
        }
        if !(self.mma_epsilon > 0.0) {
            return Err(Error::invalid("mma_epsilon must be positive"));
        }
        if let Some(a) = self.adaptive_move {
            if !(a.shrink > 0.0 && a.shrink <= 1.0 && a.grow >= 1.0 && a.floor > 0.0 && a.floor <= 1.0) {
                return Err(Error::invalid("adaptive move limits need 0 < shrink <= 1 <= grow and floor in (0, 1]"));
            }
        }
        if !(self.solver.tol > 0.0) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        self.oc.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Objective stalled (and, for the adaptive model, the bound settled).
    Converged,
    /// The initial design already matched the target.
    AlreadyOptimal,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iter: usize,
    pub g: f64,
    /// `mean(ρ)` of the evaluated design.
    pub volfrac: f64,
    /// `mean(ρ̃)` of the evaluated design.
    pub volfrac_filtered: f64,
    /// Volume bound used for the update (the fixed bound or `V*`; `ε` for MMA).
    pub vstar: f64,
    /// Multigrid cycles over the three load cases.
    pub vcycles: usize,
    pub tensor: ConductivityTensor,
    pub event: GovernorEvent,
    /// `Some` on the final iteration.
    pub stop: Option<StopReason>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub field: DensityField,
    pub tensor: ConductivityTensor,
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
}

impl RunOutcome {
    pub fn final_g(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.g)
    }
}

/// One optimization run. Each [`Optimizer::step`] evaluates the current
/// design, decides whether to stop and otherwise updates the densities.
#[derive(Debug, Clone)]
pub struct Optimizer {
    config: RunConfig,
    field: DensityField,
    filter: Filter,
    homogenizer: Homogenizer,
    governor: GovernorState,
    mma: Option<Mma>,
    limits: Vec<f64>,
    last_move: Vec<f64>,
    iter: usize,
    stalled: usize,
    last_measure: Option<f64>,
    last_tensor: Option<ConductivityTensor>,
    stop: Option<StopReason>,
}

impl Optimizer {
    /// Starts from the configured initial pattern.
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let field = init_density(config.dims, &config.init)?;
        Self::with_density(config, field)
    }

    /// Starts from a given density field.
    pub fn with_density(config: RunConfig, mut field: DensityField) -> Result<Self> {
        config.validate()?;
        if field.dims() != config.dims {
            return Err(Error::ShapeMismatch {
                expected: config.dims.len(),
                actual: field.len(),
            });
        }
        let homogenizer = Homogenizer::new(config.dims, config.material, config.solver)?;
        let filter = Filter::new(config.dims, &config.filter);
        let mma = match config.model {
            Model::MinVolumeMMA => {
                let n = config.dims.len();
                Some(Mma::new(
                    n,
                    1,
                    vec![config.oc.min_density; n],
                    vec![1.0; n],
                    config.mma,
                )?)
            }
            _ => None,
        };
        if config.symmetry == Symmetry::Central {
            symmetrize_values(&config.dims, &mut field.rho);
        }
        let n = config.dims.len();
        Ok(Optimizer {
            limits: vec![config.oc.step_limit; n],
            last_move: vec![0.0; n],
            governor: GovernorState::new(config.governor),
            config,
            field,
            filter,
            homogenizer,
            mma,
            iter: 0,
            stalled: 0,
            last_measure: None,
            last_tensor: None,
            stop: None,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn field(&self) -> &DensityField {
        &self.field
    }

    pub fn governor(&self) -> &GovernorState {
        &self.governor
    }

    pub fn iterations(&self) -> usize {
        self.iter
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn is_finished(&self) -> bool {
        self.stop.is_some()
    }

    /// Tensor of the most recently evaluated design.
    pub fn tensor(&self) -> Option<ConductivityTensor> {
        self.last_tensor
    }

    /// Filtered densities of the current design.
    pub fn filtered(&self) -> Result<Vec<f64>> {
        self.filter.forward(&self.field.rho)
    }

    pub fn step(&mut self) -> Result<IterationRecord> {
        if self.stop.is_some() {
            return Err(Error::State("optimization already finished".into()));
        }
        self.iter += 1;
        let m = self.field.len();
        let rho_f = self.filter.forward(&self.field.rho)?;
        let result = self.homogenizer.evaluate(&rho_f)?;
        let (g, dg) = self.config.objective.eval(&result.tensor);
        if !g.is_finite() {
            return Err(Error::SolverFailure(format!("objective is not finite at iteration {}", self.iter)));
        }
        self.last_tensor = Some(result.tensor);

        let sens_f = self.homogenizer.tensor_sensitivity(&dg)?;
        let mut sens = self.filter.backward(&sens_f)?;
        if self.config.smooth_sensitivity && self.config.model != Model::MinVolumeMMA {
            sens = self.filter.smooth_sensitivity(&self.field.rho, &sens)?;
        }
        if self.config.symmetry == Symmetry::Central {
            symmetrize_values(&self.config.dims, &mut sens);
        }
        self.field.grad.clone_from(&sens);

        let volfrac = self.field.mean();
        let volfrac_filtered = math::mean(&rho_f);
        let measure = match self.config.model {
            Model::MinVolumeMMA => volfrac_filtered,
            _ => g,
        };
        match self.last_measure {
            Some(prev) if (prev - measure).abs() < self.config.conv_threshold => self.stalled += 1,
            _ => self.stalled = 0,
        }
        self.last_measure = Some(measure);
        let stalled = self.stalled >= self.config.conv_window;

        let mut event = GovernorEvent::None;
        let mut stop = None;
        let vstar;
        if g < ALREADY_OPTIMAL && self.config.model != Model::MinVolumeMMA {
            stop = Some(StopReason::AlreadyOptimal);
            vstar = match self.config.model {
                Model::AdaptiveOC => self.governor.vstar,
                _ => self.config.volfrac,
            };
        } else {
            match self.config.model {
                Model::AdaptiveOC => {
                    event = self.governor.update(g, &self.field.rho, self.config.material.penalty);
                    vstar = self.governor.vstar;
                    let settled = match event {
                        GovernorEvent::Reduced(d) => d < self.config.conv_threshold,
                        _ => false,
                    };
                    if stalled && settled {
                        stop = Some(StopReason::Converged);
                    }
                }
                Model::FixedVolumeOC => {
                    vstar = self.config.volfrac;
                    if stalled {
                        stop = Some(StopReason::Converged);
                    }
                }
                Model::MinVolumeMMA => {
                    vstar = self.config.mma_epsilon;
                    if stalled && g <= self.config.mma_epsilon {
                        stop = Some(StopReason::Converged);
                    }
                }
            }
        }
        if stop.is_none() && self.iter >= self.config.max_iter {
            stop = Some(StopReason::MaxIterations);
        }

        if stop.is_none() {
            match self.config.model {
                Model::AdaptiveOC | Model::FixedVolumeOC => {
                    let limits = self.config.adaptive_move.map(|_| self.limits.as_slice());
                    let step = oc_update_limited(&self.field.rho, &sens, vstar, g, &self.config.oc, limits)?;
                    self.adapt_limits(&step.rho);
                    self.field.rho = step.rho;
                }
                Model::MinVolumeMMA => {
                    let eps = self.config.mma_epsilon;
                    let df0 = self.filter.backward(&vec![1.0 / m as f64; m])?;
                    let constraint = [g / eps - 1.0];
                    let dcon = [sens.iter().map(|s| s / eps).collect::<Vec<f64>>()];
                    let eval = MmaEval {
                        f0: volfrac_filtered,
                        df0: &df0,
                        g: &constraint,
                        dg: &dcon,
                    };
                    let mma = self.mma.as_mut().expect("MMA state exists for the MMA model");
                    mma.update(&mut self.field.rho, &eval)?;
                }
            }
            if self.config.symmetry == Symmetry::Central {
                symmetrize_values(&self.config.dims, &mut self.field.rho);
            }
        }
        self.stop = stop;
        Ok(IterationRecord {
            iter: self.iter,
            g,
            volfrac,
            volfrac_filtered,
            vstar,
            vcycles: result.total_cycles(),
            tensor: result.tensor,
            event,
            stop,
        })
    }

    fn adapt_limits(&mut self, new: &[f64]) {
        let Some(a) = self.config.adaptive_move else {
            return;
        };
        let max = self.config.oc.step_limit;
        for (((l, last), &r), &n) in self.limits.iter_mut().zip(&mut self.last_move).zip(&self.field.rho).zip(new) {
            let d = n - r;
            let turn = d * *last;
            if turn < 0.0 {
                *l = (*l * a.shrink).max(a.floor * max);
            } else if turn > 0.0 {
                *l = (*l * a.grow).min(max);
            }
            if d != 0.0 {
                *last = d;
            }
        }
    }

    /// Steps until a stop condition, calling `observe` after every iteration.
    pub fn run_with(mut self, mut observe: impl FnMut(&IterationRecord)) -> Result<RunOutcome> {
        let mut records = Vec::new();
        while self.stop.is_none() {
            let rec = self.step()?;
            observe(&rec);
            records.push(rec);
        }
        Ok(RunOutcome {
            tensor: self.last_tensor.expect("at least one iteration ran"),
            stop: self.stop.expect("loop ends on a stop reason"),
            field: self.field,
            records,
        })
    }

    pub fn run(self) -> Result<RunOutcome> {
        self.run_with(|_| {})
    }
}

/// Runs a configuration from its initial pattern to a stop condition.
pub fn run_optimization(config: RunConfig) -> Result<RunOutcome> {
    Optimizer::new(config)?.run()
}
