//! Periodic voxel density field, seeding patterns, the radial density filter
//! and the central-symmetry projection.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{wrap_axis, Dims};
use crate::math;

/// Lower clamp used by the seeding patterns for void regions.
pub const INIT_FLOOR: f64 = 1e-3;

/// Per-element design densities and the objective gradient with respect to
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    dims: Dims,
    pub rho: Vec<f64>,
    pub grad: Vec<f64>,
}

impl DensityField {
    pub fn uniform(dims: Dims, value: f64) -> Result<Self> {
        Self::from_values(dims, vec![value; dims.len()])
    }

    /// Validates length and range; reports the first offending index.
    pub fn from_values(dims: Dims, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != dims.len() {
            return Err(Error::ShapeMismatch {
                expected: dims.len(),
                actual: rho.len(),
            });
        }
        if let Some((idx, v)) = rho
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::invalid(format!(
                "density {v} at index {idx} is outside [0, 1]"
            )));
        }
        let grad = vec![0.0; rho.len()];
        Ok(DensityField { dims, rho, grad })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn mean(&self) -> f64 {
        math::mean(&self.rho)
    }

    /// Element volume `v_e = |Ω| / M` for the unit cell.
    pub fn element_volume(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.rho[self.dims.index(i, j, k)]
    }
}

/// Radial weight `d(dist, r)`; must be nonnegative and vanish for `dist >= r`.
#[derive(Debug, Clone, Copy)]
pub enum Kernel {
    /// `max(0, r − dist)`.
    Cone,
    Custom(fn(f64, f64) -> f64),
}

impl Kernel {
    pub fn weight(&self, dist: f64, radius: f64) -> f64 {
        match self {
            Kernel::Cone => (radius - dist).max(0.0),
            Kernel::Custom(f) => f(dist, radius).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FilterSpec {
    radius: f64,
    pub kernel: Kernel,
}

impl FilterSpec {
    pub fn new(radius: f64, kernel: Kernel) -> Result<Self> {
        if !(radius >= 1.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("filter radius must be >= 1 (got {radius})")));
        }
        Ok(FilterSpec { radius, kernel })
    }

    pub fn cone(radius: f64) -> Result<Self> {
        Self::new(radius, Kernel::Cone)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            radius: 1.5,
            kernel: Kernel::Cone,
        }
    }
}

/// A density filter specialised to one grid: a normalised periodic
/// convolution stencil.
#[derive(Debug, Clone)]
pub struct Filter {
    dims: Dims,
    /// `(di, dj, dk, weight)`, weights sum to one.
    stencil: Vec<([isize; 3], f64)>,
}

impl Filter {
    pub fn new(dims: Dims, spec: &FilterSpec) -> Self {
        let reach = math::floor(spec.radius) as isize;
        let extent = |n: usize| if n == 1 { 0 } else { reach };
        let (rx, ry, rz) = (extent(dims.nx), extent(dims.ny), extent(dims.nz));
        let mut stencil = Vec::new();
        for dk in -rz..=rz {
            for dj in -ry..=ry {
                for di in -rx..=rx {
                    let dist = math::sqrt((di * di + dj * dj + dk * dk) as f64);
                    let w = spec.kernel.weight(dist, spec.radius);
                    if w > 0.0 {
                        stencil.push(([di, dj, dk], w));
                    }
                }
            }
        }
        let total: f64 = stencil.iter().map(|s| s.1).sum();
        for s in stencil.iter_mut() {
            s.1 /= total;
        }
        Filter { dims, stencil }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Normalised `(offset, weight)` pairs.
    pub fn stencil(&self) -> &[([isize; 3], f64)] {
        &self.stencil
    }

    pub fn is_identity(&self) -> bool {
        self.stencil.len() == 1
    }

    fn offset_tables(&self) -> Vec<[Vec<usize>; 3]> {
        let d = self.dims.as_array();
        self.stencil
            .iter()
            .map(|(o, _)| {
                [0, 1, 2].map(|a| (0..d[a]).map(|i| wrap_axis(i, o[a], d[a])).collect())
            })
            .collect()
    }

    /// `ρ̃_e = Σ_i w(e,i) ρ_i / Σ_i w(e,i)` over the periodic neighbourhood.
    pub fn forward(&self, rho: &[f64]) -> Result<Vec<f64>> {
        self.check(rho.len())?;
        if self.is_identity() {
            return Ok(rho.to_vec());
        }
        let tables = self.offset_tables();
        let d = self.dims;
        let mut out = vec![0.0; rho.len()];
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let mut acc = 0.0;
                    for ((_, w), t) in self.stencil.iter().zip(&tables) {
                        acc += w * rho[d.index(t[0][i], t[1][j], t[2][k])];
                    }
                    out[d.index(i, j, k)] = acc;
                }
            }
        }
        Ok(out)
    }

    /// Transpose of [`Filter::forward`] applied to a gradient with respect to
    /// the filtered densities.
    pub fn backward(&self, grad_filtered: &[f64]) -> Result<Vec<f64>> {
        self.check(grad_filtered.len())?;
        if self.is_identity() {
            return Ok(grad_filtered.to_vec());
        }
        let tables = self.offset_tables();
        let d = self.dims;
        let mut out = vec![0.0; grad_filtered.len()];
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let g = grad_filtered[d.index(i, j, k)];
                    for ((_, w), t) in self.stencil.iter().zip(&tables) {
                        out[d.index(t[0][i], t[1][j], t[2][k])] += w * g;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Classic sensitivity smoothing:
    /// `ŝ_e = Σ_i H_ei ρ_i s_i / (max(γ, ρ_e) Σ_i H_ei)`.
    pub fn smooth_sensitivity(&self, rho: &[f64], sens: &[f64]) -> Result<Vec<f64>> {
        self.check(rho.len())?;
        self.check(sens.len())?;
        let weighted: Vec<f64> = rho.iter().zip(sens).map(|(r, s)| r * s).collect();
        let mut out = self.forward(&weighted)?;
        for (o, r) in out.iter_mut().zip(rho) {
            *o /= r.max(1e-3);
        }
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dims.len() {
            return Err(Error::ShapeMismatch {
                expected: self.dims.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Maps `(i, j, k)` to `(nx−1−i, ny−1−j, nz−1−k)`.
pub fn symmetric_index(dims: &Dims, idx: usize) -> usize {
    let (i, j, k) = dims.coords(idx);
    dims.index(dims.nx - 1 - i, dims.ny - 1 - j, dims.nz - 1 - k)
}

fn symmetrize(dims: &Dims, values: &mut [f64]) {
    for idx in 0..values.len() {
        let s = symmetric_index(dims, idx);
        if s > idx {
            let avg = (values[idx] + values[s]) * 0.5;
            values[idx] = avg;
            values[s] = avg;
        }
    }
}

/// Averages each element with its point-symmetric partner (and optionally the
/// gradients the same way).
pub fn project_central_symmetry(field: &mut DensityField, also_grad: bool) {
    let dims = field.dims;
    symmetrize(&dims, &mut field.rho);
    if also_grad {
        symmetrize(&dims, &mut field.grad);
    }
}

/// Symmetrizes an arbitrary per-element array.
pub fn symmetrize_values(dims: &Dims, values: &mut [f64]) {
    symmetrize(dims, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitKind {
    P,
    D,
    G,
    Iwp,
    CenterBall,
    Random,
}

impl InitKind {
    pub fn name(&self) -> &'static str {
        match self {
            InitKind::P => "p",
            InitKind::D => "d",
            InitKind::G => "g",
            InitKind::Iwp => "iwp",
            InitKind::CenterBall => "ball",
            InitKind::Random => "random",
        }
    }
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" => Ok(InitKind::P),
            "d" => Ok(InitKind::D),
            "g" => Ok(InitKind::G),
            "iwp" => Ok(InitKind::Iwp),
            "ball" | "centerball" | "center_ball" => Ok(InitKind::CenterBall),
            "random" => Ok(InitKind::Random),
            other => Err(Error::invalid(format!("unknown init pattern '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitPattern {
    pub kind: InitKind,
    pub volume_fraction: f64,
    pub seed: u64,
}

impl InitPattern {
    pub fn new(kind: InitKind, volume_fraction: f64) -> Self {
        InitPattern {
            kind,
            volume_fraction,
            seed: 0,
        }
    }
}

/// Evaluates a TPMS level-set function at angles `(X, Y, Z)`.
pub fn tpms_value(kind: InitKind, x: f64, y: f64, z: f64) -> f64 {
    use crate::math::{cos, sin};
    match kind {
        InitKind::P => cos(x) + cos(y) + cos(z),
        InitKind::G => sin(x) * cos(y) + sin(y) * cos(z) + sin(z) * cos(x),
        InitKind::D => {
            sin(x) * sin(y) * sin(z)
                + sin(x) * cos(y) * cos(z)
                + cos(x) * sin(y) * cos(z)
                + cos(x) * cos(y) * sin(z)
        }
        InitKind::Iwp => {
            2.0 * (cos(x) * cos(y) + cos(y) * cos(z) + cos(z) * cos(x))
                - (cos(2.0 * x) + cos(2.0 * y) + cos(2.0 * z))
        }
        InitKind::CenterBall | InitKind::Random => 0.0,
    }
}

/// Builds a seeded density field whose mean matches the requested volume
/// fraction (to within 0.01) by bisecting a level offset.
pub fn init_density(dims: Dims, pattern: &InitPattern) -> Result<DensityField> {
    let vf = pattern.volume_fraction;
    if !(vf > INIT_FLOOR && vf < 1.0) {
        return Err(Error::invalid(format!(
            "volume fraction {vf} is not attainable (must lie in ({INIT_FLOOR}, 1))"
        )));
    }
    let n = dims.len();
    let mut score = vec![0.0; n];
    let (lo, hi, map): (f64, f64, fn(f64, f64, f64) -> f64) = match pattern.kind {
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(pattern.seed);
            for s in score.iter_mut() {
                // 53 random mantissa bits -> [0, 1)
                let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                *s = 0.3 + 0.4 * u;
            }
            (-1.0, 1.0, |s, t, _| s - t)
        }
        InitKind::CenterBall => {
            let d = dims.as_array();
            let center = d.map(|n| n as f64 / 2.0);
            let mut max_r: f64 = 0.0;
            for (idx, s) in score.iter_mut().enumerate() {
                let (i, j, k) = dims.coords(idx);
                let mut r2 = 0.0;
                for (a, c) in [i, j, k].into_iter().enumerate() {
                    let mut delta = (c as f64 + 0.5 - center[a]).abs();
                    delta = delta.min(d[a] as f64 - delta);
                    r2 += delta * delta;
                }
                *s = math::sqrt(r2);
                max_r = max_r.max(*s);
            }
            // void inside radius t, ramped over one element
            (-1.0, max_r + 1.0, |s, t, _| s - t + 0.5)
        }
        kind => {
            let d = dims.as_array();
            let angle = |c: usize, n: usize| 2.0 * PI * (c as f64 + 0.5) / n as f64;
            for (idx, s) in score.iter_mut().enumerate() {
                let (i, j, k) = dims.coords(idx);
                *s = tpms_value(kind, angle(i, d[0]), angle(j, d[1]), angle(k, d[2]));
            }
            let (mn, mx) = score
                .iter()
                .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            (mn - 1.0, mx + 1.0, |s, t, band| 0.5 + (s - t) / band)
        }
    };
    let band = level_band(&dims, &score);
    let eval = |t: f64, out: &mut [f64]| {
        for (r, &s) in out.iter_mut().zip(&score) {
            *r = map(s, t, band).clamp(INIT_FLOOR, 1.0);
        }
        math::mean(out)
    };
    let mut rho = vec![0.0; n];
    let (mut a, mut b) = (lo, hi);
    // mean(ρ(t)) is non-increasing in t
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if eval(mid, &mut rho) > vf {
            a = mid;
        } else {
            b = mid;
        }
    }
    let achieved = eval(0.5 * (a + b), &mut rho);
    if (achieved - vf).abs() > 0.01 {
        return Err(Error::invalid(format!(
            "could not reach volume fraction {vf} with pattern {} (got {achieved})",
            pattern.kind.name()
        )));
    }
    DensityField::from_values(dims, rho)
}

/// Largest jump of the level-set values between face neighbours; used as the
/// width of the linear ramp across the interface.
fn level_band(dims: &Dims, score: &[f64]) -> f64 {
    let mut band: f64 = 0.0;
    for idx in 0..score.len() {
        let (i, j, k) = dims.coords(idx);
        for (di, dj, dk) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
            let nb = dims.wrap(i, j, k, di, dj, dk);
            band = band.max((score[idx] - score[nb]).abs());
        }
    }
    if band > 0.0 {
        band
    } else {
        1.0
    }
}
