//! Adaptive volume bound for the tensor-matching model.

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorParams {
    /// Objective level at or below which the bound is reduced.
    pub bound: f64,
    /// Multiplier applied to the decrease factor after each reduction.
    pub decay: f64,
    /// Fraction of `gap · Df` restored by a rebound.
    pub rebound: f64,
    /// Consecutive stagnant iterations that trigger a rebound.
    pub patience: usize,
    /// Relative objective change regarded as no progress.
    pub progress_tol: f64,
    /// Distance of the volume to the bound regarded as touching it.
    pub volume_tol: f64,
}

impl Default for GovernorParams {
    fn default() -> Self {
        GovernorParams {
            bound: 1e-4,
            decay: 0.8,
            rebound: 0.3,
            patience: 5,
            progress_tol: 1e-3,
            volume_tol: 0.01,
        }
    }
}

/// What one update did to the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GovernorEvent {
    None,
    /// Bound lowered by the given amount.
    Reduced(f64),
    /// Bound raised by the given amount.
    Rebounded(f64),
    ReducedAndRebounded(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorState {
    pub vstar: f64,
    pub decrease_factor: f64,
    /// `V* − lowBound` from the latest reduction; zero before the first one.
    pub gap: f64,
    pub count: usize,
    pub iter: usize,
    /// Objective of the previous update.
    pub g_prev: f64,
    pub params: GovernorParams,
}

impl Default for GovernorState {
    fn default() -> Self {
        Self::new(GovernorParams::default())
    }
}

impl GovernorState {
    pub fn new(params: GovernorParams) -> Self {
        GovernorState {
            vstar: 1.0,
            decrease_factor: 1.0,
            gap: 0.0,
            count: 0,
            iter: 0,
            g_prev: 1.0,
            params,
        }
    }

    /// `mean(ρ^p)`.
    pub fn low_bound(rho: &[f64], penalty: f64) -> f64 {
        let powered: alloc::vec::Vec<f64> = rho.iter().map(|&r| math::powf(r, penalty)).collect();
        math::mean(&powered)
    }

    /// Update with the objective `g` and volume `volume` of the current
    /// iterate and its `lowBound`.
    pub fn update_with(&mut self, g: f64, volume: f64, low_bound: f64) -> GovernorEvent {
        let p = self.params;
        let mut reduced = None;
        if g <= p.bound {
            self.gap = (self.vstar - low_bound).max(0.0);
            let dec = self.gap * self.decrease_factor;
            self.vstar -= dec;
            self.decrease_factor *= p.decay;
            reduced = Some(dec);
        }
        let little_progress = (self.g_prev - g).abs() < p.progress_tol * g.max(1e-12);
        let too_big = g > p.bound;
        let at_bound = volume > self.vstar - p.volume_tol;
        if little_progress && too_big && at_bound {
            self.count += 1;
        } else {
            self.count = 0;
        }
        let mut rebound = None;
        if self.count >= p.patience {
            let inc = (p.rebound * self.gap * self.decrease_factor).min(1.0 - self.vstar);
            self.vstar += inc;
            self.count = 0;
            rebound = Some(inc);
        }
        self.g_prev = g;
        self.iter += 1;
        match (reduced, rebound) {
            (None, None) => GovernorEvent::None,
            (Some(d), None) => GovernorEvent::Reduced(d),
            (None, Some(i)) => GovernorEvent::Rebounded(i),
            (Some(d), Some(i)) => GovernorEvent::ReducedAndRebounded(d, i),
        }
    }

    /// Convenience form computing volume and `lowBound` from `ρ`.
    pub fn update(&mut self, g: f64, rho: &[f64], penalty: f64) -> GovernorEvent {
        let low = Self::low_bound(rho, penalty);
        self.update_with(g, math::mean(rho), low)
    }
}
