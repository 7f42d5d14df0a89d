//! Optimality-criteria density update.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Guard for non-negative sensitivities: elements whose density increase does
/// not decrease the objective drift down once the constraint is active.
pub const EPS_B: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcParams {
    pub min_density: f64,
    /// Largest change of one density per iteration.
    pub step_limit: f64,
    /// Exponent `η` applied to the optimality ratio.
    pub damp: f64,
    /// Relative width of the final multiplier bracket.
    pub bisection_tol: f64,
    /// Upper bound on the linearized decrease of an unconstrained step, as a
    /// fraction of the current objective. `None` disables the bound.
    pub trust_ratio: Option<f64>,
}

impl Default for OcParams {
    fn default() -> Self {
        OcParams {
            min_density: 1e-3,
            step_limit: 0.05,
            damp: 0.5,
            bisection_tol: 1e-10,
            trust_ratio: Some(0.25),
        }
    }
}

impl OcParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.min_density) {
            return Err(Error::invalid("min_density must lie in [0, 1)"));
        }
        if !(self.step_limit > 0.0 && self.step_limit <= 1.0) {
            return Err(Error::invalid("step_limit must lie in (0, 1]"));
        }
        if !(self.damp > 0.0 && self.damp <= 1.0) {
            return Err(Error::invalid("damp must lie in (0, 1]"));
        }
        if !(self.bisection_tol > 0.0) {
            return Err(Error::invalid("bisection_tol must be positive"));
        }
        if let Some(t) = self.trust_ratio {
            if !(t > 0.0) {
                return Err(Error::invalid("trust_ratio must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcStep {
    pub rho: Vec<f64>,
    pub lambda: f64,
    /// `false` when the volume bound did not limit the step.
    pub constraint_active: bool,
    /// `Σ_e −s_e Δρ_e`, the linearized objective decrease.
    pub predicted_decrease: f64,
}

/// Per-element box `[lo, hi]` combining the move limit and the density bounds.
#[derive(Debug, Clone)]
pub struct MoveBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl MoveBox {
    /// Uses `limits[e]` (capped at `step_limit`) as the move limit of element
    /// `e` when given, else `step_limit` everywhere.
    pub fn new(rho: &[f64], params: &OcParams, limits: Option<&[f64]>) -> Self {
        let limit = |e: usize| limits.map_or(params.step_limit, |l| l[e].min(params.step_limit));
        let lo = rho
            .iter()
            .enumerate()
            .map(|(e, &r)| (r - limit(e)).max(params.min_density).min(r.max(params.min_density)))
            .collect();
        let hi = rho
            .iter()
            .enumerate()
            .map(|(e, &r)| (r + limit(e)).min(1.0).max(r.min(1.0)))
            .collect();
        MoveBox { lo, hi }
    }

    #[inline]
    fn clamp(&self, e: usize, v: f64) -> f64 {
        v.clamp(self.lo[e], self.hi[e])
    }
}

/// Candidate densities for a fixed multiplier `λ` (with `∂V/∂ρ_e = 1/M`).
pub fn oc_candidate(rho: &[f64], sens: &[f64], lambda: f64, params: &OcParams, out: &mut [f64]) {
    let bounds = MoveBox::new(rho, params, None);
    candidate(rho, sens, lambda, params, &bounds, out);
}

fn candidate(rho: &[f64], sens: &[f64], lambda: f64, params: &OcParams, bounds: &MoveBox, out: &mut [f64]) {
    let m = rho.len() as f64;
    for (e, ((o, &r), &s)) in out.iter_mut().zip(rho).zip(sens).enumerate() {
        let b = (-s).max(EPS_B) * m / lambda;
        *o = bounds.clamp(e, r * math::powf(b, params.damp));
    }
}

fn predicted_decrease(rho: &[f64], new: &[f64], sens: &[f64]) -> f64 {
    let terms: Vec<f64> = rho
        .iter()
        .zip(new)
        .zip(sens)
        .map(|((r, n), s)| -s * (n - r))
        .collect();
    math::pairwise_sum(&terms)
}

const LAMBDA_MIN: f64 = 1e-300;
const LAMBDA_MAX: f64 = 1e300;

/// Log-space bisection for the smallest `x` in `[lo, hi]` at which `pred(x)`
/// holds, assuming `pred` switches from false to true once.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, mut pred: impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..400 {
        if hi / lo - 1.0 <= tol {
            break;
        }
        let mid = math::sqrt(lo * hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Step taken when the volume bound does not bind: elements with `s_e < 0`
/// grow by `(−s_e M / c⁻)^η`, elements with `s_e > 0` shrink by
/// `(c⁺ / (s_e M))^η`. Each side's scale is the gentlest one whose
/// linearized decrease reaches half the trust budget (or the full move
/// limit when no trust bound is set).
pub fn unconstrained_step(rho: &[f64], sens: &[f64], objective: f64, params: &OcParams) -> Vec<f64> {
    unconstrained_in(rho, sens, objective, params, &MoveBox::new(rho, params, None))
}

fn unconstrained_in(rho: &[f64], sens: &[f64], objective: f64, params: &OcParams, bounds: &MoveBox) -> Vec<f64> {
    let m = rho.len() as f64;
    let grow = |c: f64, out: &mut [f64]| {
        for (e, ((o, &r), &s)) in out.iter_mut().zip(rho).zip(sens).enumerate() {
            *o = if s < 0.0 {
                bounds.clamp(e, r * math::powf((-s * m / c).max(1.0), params.damp))
            } else {
                r
            };
        }
    };
    let shrink = |c: f64, out: &mut [f64]| {
        for (e, ((o, &r), &s)) in out.iter_mut().zip(rho).zip(sens).enumerate() {
            *o = if s > 0.0 {
                bounds.clamp(e, r * math::powf((c / (s * m)).min(1.0), params.damp))
            } else {
                r
            };
        }
    };
    let mut up = alloc::vec![0.0; rho.len()];
    let mut down = alloc::vec![0.0; rho.len()];
    match params.trust_ratio {
        None => {
            grow(LAMBDA_MIN, &mut up);
            shrink(LAMBDA_MIN, &mut down);
        }
        Some(ratio) => {
            let budget = 0.5 * ratio * objective.max(0.0);
            // both sides move less as their scale rises
            let c_up = bisect(LAMBDA_MIN, LAMBDA_MAX, params.bisection_tol, |c| {
                grow(c, &mut up);
                predicted_decrease(rho, &up, sens) <= budget
            });
            grow(c_up, &mut up);
            let c_down = bisect(LAMBDA_MIN, LAMBDA_MAX, params.bisection_tol, |c| {
                shrink(c, &mut down);
                predicted_decrease(rho, &down, sens) <= budget
            });
            shrink(c_down, &mut down);
        }
    }
    rho.iter()
        .zip(up.iter().zip(&down))
        .map(|(&r, (&u, &d))| r + (u - r) + (d - r))
        .collect()
}

/// One OC step toward `mean(ρ) ≤ vol_bound`.
///
/// If the unconstrained step already satisfies the bound it is returned with
/// `constraint_active = false`; `objective` is only used by its trust bound.
/// Otherwise `λ` is bisected so that the bound holds with equality.
pub fn oc_update(
    rho: &[f64],
    sens: &[f64],
    vol_bound: f64,
    objective: f64,
    params: &OcParams,
) -> Result<OcStep> {
    oc_update_limited(rho, sens, vol_bound, objective, params, None)
}

/// [`oc_update`] with per-element move limits (each capped at `step_limit`).
pub fn oc_update_limited(
    rho: &[f64],
    sens: &[f64],
    vol_bound: f64,
    objective: f64,
    params: &OcParams,
    limits: Option<&[f64]>,
) -> Result<OcStep> {
    params.validate()?;
    for len in [Some(sens.len()), limits.map(<[f64]>::len)].into_iter().flatten() {
        if len != rho.len() {
            return Err(Error::ShapeMismatch {
                expected: rho.len(),
                actual: len,
            });
        }
    }
    let bounds = MoveBox::new(rho, params, limits);
    if !(vol_bound > 0.0 && vol_bound <= 1.0) {
        return Err(Error::invalid("volume bound must lie in (0, 1]"));
    }
    let free = unconstrained_in(rho, sens, objective, params, &bounds);
    if math::mean(&free) <= vol_bound {
        let predicted_decrease = predicted_decrease(rho, &free, sens);
        return Ok(OcStep {
            rho: free,
            lambda: 0.0,
            constraint_active: false,
            predicted_decrease,
        });
    }
    let mut buf = alloc::vec![0.0; rho.len()];
    // at λ = εB·M no element grows without a descent direction
    let floor = EPS_B * rho.len() as f64;
    let lambda = if {
        candidate(rho, sens, floor, params, &bounds, &mut buf);
        math::mean(&buf) <= vol_bound
    } {
        floor
    } else {
        bisect(floor, LAMBDA_MAX, params.bisection_tol, |l| {
            candidate(rho, sens, l, params, &bounds, &mut buf);
            math::mean(&buf) <= vol_bound
        })
    };
    candidate(rho, sens, lambda, params, &bounds, &mut buf);
    let predicted_decrease = predicted_decrease(rho, &buf, sens);
    Ok(OcStep {
        rho: buf,
        lambda,
        constraint_active: true,
        predicted_decrease,
    })
}
