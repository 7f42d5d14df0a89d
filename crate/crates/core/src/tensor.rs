//! Symmetric 3×3 conductivity tensors in packed 6-vector form.

use core::ops::Index;

/// `(row, col)` of each packed slot: `[κ11, κ22, κ33, κ12, κ23, κ13]`.
pub const PACKED_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConductivityTensor(pub [f64; 6]);

impl ConductivityTensor {
    pub fn from_packed(values: [f64; 6]) -> Self {
        ConductivityTensor(values)
    }

    pub fn isotropic(k: f64) -> Self {
        ConductivityTensor([k, k, k, 0.0, 0.0, 0.0])
    }

    pub fn packed(&self) -> [f64; 6] {
        self.0
    }

    /// Packed slot holding entry `(i, j)`.
    pub fn slot(i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        PACKED_PAIRS
            .iter()
            .position(|&p| p == (a, b))
            .expect("indices must be < 3")
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[Self::slot(i, j)]
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        m
    }

    pub fn determinant(&self) -> f64 {
        let m = self.to_matrix();
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Leading principal minors `[Δ1, Δ2, Δ3]`.
    pub fn leading_minors(&self) -> [f64; 3] {
        let m = self.to_matrix();
        [m[0][0], m[0][0] * m[1][1] - m[0][1] * m[1][0], self.determinant()]
    }

    /// Sylvester's criterion.
    pub fn is_positive_definite(&self) -> bool {
        self.leading_minors().iter().all(|&d| d > 0.0)
    }

    pub fn max_abs_diff(&self, other: &ConductivityTensor) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for ConductivityTensor {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<[f64; 6]> for ConductivityTensor {
    fn from(v: [f64; 6]) -> Self {
        ConductivityTensor(v)
    }
}
