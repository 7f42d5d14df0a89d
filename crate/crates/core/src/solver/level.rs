use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::element::{box_conduction_matrix, Mat8};
use crate::error::{Error, Result};
use crate::grid::{Dims, Neighbors, CORNERS};

/// Colour of vertex `(i, j, k)` in the 8-colour partition.
#[inline]
pub fn color_of(i: usize, j: usize, k: usize) -> usize {
    (i & 1) | ((j & 1) << 1) | ((k & 1) << 2)
}

/// One multigrid level: per-element weights, the level template, and
/// per-vertex temperature, load and residual.
#[derive(Debug, Clone)]
pub struct GridLevel {
    dims: Dims,
    nb: Neighbors,
    template: Mat8,
    /// Per-element conductivity weights (κ_e on the finest level).
    pub weights: Vec<f64>,
    /// Assembled diagonal of the level operator.
    diag: Vec<f64>,
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub r: Vec<f64>,
}

impl GridLevel {
    /// `cell` is the element edge length along each axis and `scale` the
    /// factor carried by the transfer operators.
    pub fn new(dims: Dims, cell: [f64; 3], scale: f64) -> Self {
        let mut template = box_conduction_matrix(cell);
        for row in template.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        let n = dims.len();
        GridLevel {
            dims,
            nb: Neighbors::new(dims),
            template,
            weights: vec![1.0; n],
            diag: vec![0.0; n],
            t: vec![0.0; n],
            f: vec![0.0; n],
            r: vec![0.0; n],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn template(&self) -> &Mat8 {
        &self.template
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.dims.len() {
            return Err(Error::ShapeMismatch {
                expected: self.dims.len(),
                actual: weights.len(),
            });
        }
        self.weights.copy_from_slice(weights);
        self.refresh_diag()
    }

    fn refresh_diag(&mut self) -> Result<()> {
        let d = self.dims;
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let v = d.index(i, j, k);
                    let (idx27, elems) = self.stencil(i, j, k);
                    let mut s = 0.0;
                    for (e, &el) in elems.iter().enumerate() {
                        let me = 7 - e;
                        let base = CORNERS[e];
                        for (jn, c) in CORNERS.iter().enumerate() {
                            let loc = local27(base[0] + c[0], base[1] + c[1], base[2] + c[2]);
                            if idx27[loc] == v {
                                s += self.weights[el] * self.template[me][jn];
                            }
                        }
                    }
                    if !(s > 0.0) {
                        return Err(Error::SolverFailure(format!(
                            "non-positive diagonal {s} at vertex {v}"
                        )));
                    }
                    self.diag[v] = s;
                }
            }
        }
        Ok(())
    }

    /// Vertex indices of the 3×3×3 neighbourhood of `(i, j, k)` and the 8
    /// incident element indices. Incident element `e` has the vertex as its
    /// local corner `7 − e`.
    #[inline]
    fn stencil(&self, i: usize, j: usize, k: usize) -> ([usize; 27], [usize; 8]) {
        let d = &self.dims;
        let xs = [self.nb.prev[0][i], i, self.nb.next[0][i]];
        let ys = [self.nb.prev[1][j], j, self.nb.next[1][j]];
        let zs = [self.nb.prev[2][k], k, self.nb.next[2][k]];
        let mut idx = [0usize; 27];
        for c in 0..3 {
            for b in 0..3 {
                for a in 0..3 {
                    idx[local27(a, b, c)] = d.index(xs[a], ys[b], zs[c]);
                }
            }
        }
        let mut elems = [0usize; 8];
        for (e, c) in CORNERS.iter().enumerate() {
            elems[e] = d.index(xs[c[0]], ys[c[1]], zs[c[2]]);
        }
        (idx, elems)
    }

    /// `[KT]_v = Σ_e w_e Σ_j K[7−e][j] T_j` for one vertex.
    #[inline]
    fn apply_at(&self, x: &[f64], i: usize, j: usize, k: usize) -> f64 {
        let (idx, elems) = self.stencil(i, j, k);
        let mut local = [0.0; 27];
        for (l, &g) in local.iter_mut().zip(idx.iter()) {
            *l = x[g];
        }
        let mut acc = 0.0;
        for (e, &el) in elems.iter().enumerate() {
            let row = &self.template[7 - e];
            let base = CORNERS[e];
            let mut s = 0.0;
            for (jn, c) in CORNERS.iter().enumerate() {
                s += row[jn] * local[local27(base[0] + c[0], base[1] + c[1], base[2] + c[2])];
            }
            acc += self.weights[el] * s;
        }
        acc
    }

    /// Matrix-free product `out = K x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dims;
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    out[d.index(i, j, k)] = self.apply_at(x, i, j, k);
                }
            }
        }
    }

    /// `r = f − K t` on the level's own buffers.
    pub fn update_residual(&mut self) {
        let d = self.dims;
        let mut r = core::mem::take(&mut self.r);
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let v = d.index(i, j, k);
                    r[v] = self.f[v] - self.apply_at(&self.t, i, j, k);
                }
            }
        }
        self.r = r;
    }

    /// One Gauss–Seidel sweep over the 8 colour classes in the given order.
    /// Solving `S_v T_v = f_v − M_v` equals `T_v += (f_v − [KT]_v) / S_v`.
    pub fn relax(&mut self, reverse: bool) {
        let d = self.dims;
        let mut t = core::mem::take(&mut self.t);
        for step in 0..8 {
            let color = if reverse { 7 - step } else { step };
            let (ci, cj, ck) = (color & 1, (color >> 1) & 1, (color >> 2) & 1);
            // axes of extent 1 only carry parity 0
            if (ci == 1 && d.nx == 1) || (cj == 1 && d.ny == 1) || (ck == 1 && d.nz == 1) {
                continue;
            }
            for k in (ck..d.nz).step_by(2) {
                for j in (cj..d.ny).step_by(2) {
                    for i in (ci..d.nx).step_by(2) {
                        let v = d.index(i, j, k);
                        let kt = self.apply_at(&t, i, j, k);
                        t[v] += (self.f[v] - kt) / self.diag[v];
                    }
                }
            }
        }
        self.t = t;
    }

    /// Explicitly assembled dense operator (row-major), for the coarsest level
    /// and for tests.
    pub fn assemble_dense(&self) -> Vec<f64> {
        let d = self.dims;
        let n = d.len();
        let mut a = vec![0.0; n * n];
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let el = d.index(i, j, k);
                    let verts = crate::grid::element_vertices(&d, &self.nb, i, j, k);
                    let w = self.weights[el];
                    for (p, &vp) in verts.iter().enumerate() {
                        for (q, &vq) in verts.iter().enumerate() {
                            a[vp * n + vq] += w * self.template[p][q];
                        }
                    }
                }
            }
        }
        a
    }
}

#[inline]
fn local27(a: usize, b: usize, c: usize) -> usize {
    a + 3 * (b + 3 * c)
}
