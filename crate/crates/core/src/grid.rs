//! Periodic voxel lattice indexing.
//!
//! Elements and vertices share the same `(nx, ny, nz)` counts: under
//! periodicity vertex `n` along an axis aliases vertex `0`. Linear indices are
//! x-fastest, then y, then z.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        Ok(Dims { nx, ny, nz })
    }

    pub fn cube(n: usize) -> Result<Self> {
        Dims::new(n, n, n)
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn from_array(a: [usize; 3]) -> Self {
        Dims {
            nx: a[0],
            ny: a[1],
            nz: a[2],
        }
    }

    /// Total element (= vertex) count, `M`.
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        let k = idx / (self.nx * self.ny);
        (i, j, k)
    }

    /// Index of `(i + di, j + dj, k + dk)` with periodic wrap.
    #[inline]
    pub fn wrap(&self, i: usize, j: usize, k: usize, di: isize, dj: isize, dk: isize) -> usize {
        let wi = wrap_axis(i, di, self.nx);
        let wj = wrap_axis(j, dj, self.ny);
        let wk = wrap_axis(k, dk, self.nz);
        self.index(wi, wj, wk)
    }
}

#[inline]
pub(crate) fn wrap_axis(i: usize, d: isize, n: usize) -> usize {
    let n = n as isize;
    (((i as isize + d) % n + n) % n) as usize
}

/// Offsets of the 8 element corners, lexicographic with x fastest.
pub const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Per-axis neighbour tables: `prev[i] = i - 1`, `next[i] = i + 1` (periodic).
#[derive(Debug, Clone)]
pub(crate) struct Neighbors {
    pub prev: [alloc::vec::Vec<usize>; 3],
    pub next: [alloc::vec::Vec<usize>; 3],
}

impl Neighbors {
    pub fn new(dims: Dims) -> Self {
        let build = |n: usize, d: isize| (0..n).map(|i| wrap_axis(i, d, n)).collect();
        let a = dims.as_array();
        Neighbors {
            prev: [build(a[0], -1), build(a[1], -1), build(a[2], -1)],
            next: [build(a[0], 1), build(a[1], 1), build(a[2], 1)],
        }
    }
}

/// Vertex indices of the 8 corners of element `(i, j, k)`.
#[inline]
pub(crate) fn element_vertices(
    dims: &Dims,
    nb: &Neighbors,
    i: usize,
    j: usize,
    k: usize,
) -> [usize; 8] {
    let xs = [i, nb.next[0][i]];
    let ys = [j, nb.next[1][j]];
    let zs = [k, nb.next[2][k]];
    let mut out = [0usize; 8];
    for (a, c) in CORNERS.iter().enumerate() {
        out[a] = dims.index(xs[c[0]], ys[c[1]], zs[c[2]]);
    }
    out
}
