//! Trilinear hexahedral conduction templates and SIMP interpolation.

use crate::error::{Error, Result};
use crate::grid::CORNERS;
use crate::math;

pub type Mat8 = [[f64; 8]; 8];

/// Unit-voxel conduction matrix `K0`, nodal test temperatures `T0` and the
/// matching load template `f0 = K0 * T0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementTemplates {
    pub k0: Mat8,
    /// Column `i` holds the coordinate of each corner along axis `i`.
    pub t0: [[f64; 3]; 8],
    pub f0: [[f64; 3]; 8],
}

impl ElementTemplates {
    pub fn build() -> Self {
        let k0 = box_conduction_matrix([1.0, 1.0, 1.0]);
        let mut t0 = [[0.0; 3]; 8];
        for (a, c) in CORNERS.iter().enumerate() {
            for d in 0..3 {
                t0[a][d] = c[d] as f64;
            }
        }
        let mut f0 = [[0.0; 3]; 8];
        for a in 0..8 {
            for i in 0..3 {
                f0[a][i] = (0..8).map(|b| k0[a][b] * t0[b][i]).sum();
            }
        }
        ElementTemplates { k0, t0, f0 }
    }
}

impl Default for ElementTemplates {
    fn default() -> Self {
        Self::build()
    }
}

/// `∫ ∇Nᵀ∇N` over an axis-aligned box with edge lengths `h`, evaluated with
/// 2×2×2 Gauss points (exact for trilinear shape functions).
pub fn box_conduction_matrix(h: [f64; 3]) -> Mat8 {
    let g = 0.5 / math::sqrt(3.0);
    let points = [0.5 - g, 0.5 + g];
    let volume = h[0] * h[1] * h[2];
    let mut k = [[0.0; 8]; 8];
    for &px in &points {
        for &py in &points {
            for &pz in &points {
                let xi = [px, py, pz];
                let mut grad = [[0.0; 3]; 8];
                for (a, c) in CORNERS.iter().enumerate() {
                    let f = |d: usize| if c[d] == 1 { xi[d] } else { 1.0 - xi[d] };
                    let df = |d: usize| if c[d] == 1 { 1.0 } else { -1.0 };
                    grad[a] = [
                        df(0) * f(1) * f(2) / h[0],
                        f(0) * df(1) * f(2) / h[1],
                        f(0) * f(1) * df(2) / h[2],
                    ];
                }
                // each Gauss point carries weight 1/8 of the box volume
                let w = volume / 8.0;
                for a in 0..8 {
                    for b in 0..8 {
                        let dot: f64 = (0..3).map(|d| grad[a][d] * grad[b][d]).sum();
                        k[a][b] += w * dot;
                    }
                }
            }
        }
    }
    k
}

/// Solid/void conductivities and the SIMP exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub kappa0: f64,
    pub kappa_min: f64,
    pub penalty: f64,
}

impl MaterialParams {
    pub fn new(kappa0: f64, kappa_min: f64, penalty: f64) -> Result<Self> {
        if !(kappa_min > 0.0 && kappa0 > kappa_min && kappa0.is_finite()) {
            return Err(Error::invalid(alloc::format!(
                "conductivities must satisfy kappa0 > kappa_min > 0 (got {kappa0}, {kappa_min})"
            )));
        }
        if !(penalty >= 1.0 && penalty.is_finite()) {
            return Err(Error::invalid(alloc::format!("penalty must be >= 1 (got {penalty})")));
        }
        Ok(MaterialParams {
            kappa0,
            kappa_min,
            penalty,
        })
    }

    /// `κ_min + ρ^p (κ0 − κ_min)`.
    #[inline]
    pub fn conductivity(&self, rho: f64) -> f64 {
        self.kappa_min + penalized(rho, self.penalty) * (self.kappa0 - self.kappa_min)
    }

    /// `p ρ^(p−1) (κ0 − κ_min)`.
    #[inline]
    pub fn conductivity_derivative(&self, rho: f64) -> f64 {
        let p = self.penalty;
        let dp = if p == 1.0 {
            1.0
        } else if p == 3.0 {
            3.0 * rho * rho
        } else {
            p * math::powf(rho, p - 1.0)
        };
        dp * (self.kappa0 - self.kappa_min)
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            kappa0: 1.0,
            kappa_min: 1e-4,
            penalty: 3.0,
        }
    }
}

#[inline]
pub(crate) fn penalized(rho: f64, p: f64) -> f64 {
    if p == 1.0 {
        rho
    } else if p == 3.0 {
        rho * rho * rho
    } else {
        math::powf(rho, p)
    }
}
