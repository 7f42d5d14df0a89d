//! Trilinear interpolation `I` and full-weighting restriction `R = c·Iᵀ`.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::Dims;

/// Separable transfer between a fine grid and its coarsened grid. Axes are
/// either halved or left untouched.
#[derive(Debug, Clone)]
pub struct Transfer {
    fine: Dims,
    coarse: Dims,
    /// For every fine index along each axis, the coarse contributors.
    taps: [Vec<[(usize, f64); 2]>; 3],
    /// `c` in `R = c·Iᵀ`.
    scale: f64,
}

impl Transfer {
    pub fn new(fine: Dims, coarse: Dims) -> Self {
        let f = fine.as_array();
        let c = coarse.as_array();
        let mut halved = 0;
        let taps = [0, 1, 2].map(|a| {
            if f[a] == c[a] {
                (0..f[a]).map(|i| [(i, 1.0), (i, 0.0)]).collect()
            } else {
                assert_eq!(f[a], 2 * c[a], "axis must be halved or kept");
                halved += 1;
                (0..f[a])
                    .map(|i| {
                        if i % 2 == 0 {
                            [(i / 2, 1.0), (i / 2, 0.0)]
                        } else {
                            [(i / 2, 0.5), ((i / 2 + 1) % c[a], 0.5)]
                        }
                    })
                    .collect()
            }
        });
        Transfer {
            fine,
            coarse,
            taps,
            scale: 1.0 / (1u32 << halved) as f64,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn fine(&self) -> Dims {
        self.fine
    }

    pub fn coarse(&self) -> Dims {
        self.coarse
    }

    #[inline]
    fn for_each_tap(&self, i: usize, j: usize, k: usize, mut f: impl FnMut(usize, f64)) {
        for &(cz, wz) in &self.taps[2][k] {
            if wz == 0.0 {
                continue;
            }
            for &(cy, wy) in &self.taps[1][j] {
                if wy == 0.0 {
                    continue;
                }
                for &(cx, wx) in &self.taps[0][i] {
                    if wx == 0.0 {
                        continue;
                    }
                    f(self.coarse.index(cx, cy, cz), wx * wy * wz);
                }
            }
        }
    }

    /// `coarse = R fine`.
    pub fn restrict(&self, fine: &[f64], coarse: &mut [f64]) {
        coarse.iter_mut().for_each(|v| *v = 0.0);
        let d = self.fine;
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let v = fine[d.index(i, j, k)] * self.scale;
                    self.for_each_tap(i, j, k, |u, w| coarse[u] += w * v);
                }
            }
        }
    }

    /// `fine += I coarse`.
    pub fn prolong_add(&self, coarse: &[f64], fine: &mut [f64]) {
        let d = self.fine;
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let mut acc = 0.0;
                    self.for_each_tap(i, j, k, |u, w| acc += w * coarse[u]);
                    fine[d.index(i, j, k)] += acc;
                }
            }
        }
    }

    /// Averages fine element weights over their children.
    pub fn coarsen_weights(&self, fine: &[f64]) -> Vec<f64> {
        let f = self.fine.as_array();
        let c = self.coarse.as_array();
        let mut out = vec![0.0; self.coarse.len()];
        let children = (self.fine.len() / self.coarse.len()) as f64;
        let d = self.fine;
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let map = |x: usize, a: usize| if f[a] == c[a] { x } else { x / 2 };
                    let u = self.coarse.index(map(i, 0), map(j, 1), map(k, 2));
                    out[u] += fine[d.index(i, j, k)];
                }
            }
        }
        out.iter_mut().for_each(|v| *v /= children);
        out
    }
}

pub fn restrict(t: &Transfer, fine: &[f64], coarse: &mut [f64]) {
    t.restrict(fine, coarse)
}

pub fn prolong_add(t: &Transfer, coarse: &[f64], fine: &mut [f64]) {
    t.prolong_add(coarse, fine)
}
