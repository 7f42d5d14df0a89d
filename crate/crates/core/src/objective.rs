//! Tensor-mismatch objectives and target feasibility.

use alloc::format;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::{ConductivityTensor, PACKED_PAIRS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// `Σ (κ_c − κ*_c)²`
    SquaredError,
    /// `Σ (κ_c/κ*_c − 1)²`
    RelativeSquaredError,
    /// `Σ |κ_c − κ*_c|`
    L1,
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::SquaredError => "mse",
            ObjectiveKind::RelativeSquaredError => "rel",
            ObjectiveKind::L1 => "l1",
        }
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(ObjectiveKind::SquaredError),
            "rel" => Ok(ObjectiveKind::RelativeSquaredError),
            "l1" => Ok(ObjectiveKind::L1),
            other => Err(Error::invalid(format!("unknown objective '{other}'"))),
        }
    }
}

/// Objective kind, target tensor and a per-component mask. Masked-out
/// components contribute nothing (used by planar designs, which only target
/// `κ11`, `κ22` and `κ12`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSpec {
    kind: ObjectiveKind,
    target: ConductivityTensor,
    mask: [bool; 6],
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, target: ConductivityTensor) -> Result<Self> {
        Self::with_mask(kind, target, [true; 6])
    }

    /// Only `κ11`, `κ22` and `κ12` are targeted.
    pub fn planar(kind: ObjectiveKind, target: ConductivityTensor) -> Result<Self> {
        Self::with_mask(kind, target, [true, true, false, true, false, false])
    }

    pub fn with_mask(kind: ObjectiveKind, target: ConductivityTensor, mask: [bool; 6]) -> Result<Self> {
        if target.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("target tensor has non-finite components"));
        }
        if kind == ObjectiveKind::RelativeSquaredError {
            if let Some(c) = (0..6).find(|&c| mask[c] && target.0[c] == 0.0) {
                let (i, j) = PACKED_PAIRS[c];
                return Err(Error::invalid(format!(
                    "relative objective divides by target component k{}{} which is zero",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(ObjectiveSpec { kind, target, mask })
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn target(&self) -> &ConductivityTensor {
        &self.target
    }

    pub fn mask(&self) -> [bool; 6] {
        self.mask
    }

    /// Returns `g` and `∂g/∂κ_c` for each packed component.
    pub fn eval(&self, kappa: &ConductivityTensor) -> (f64, [f64; 6]) {
        let mut g = 0.0;
        let mut dg = [0.0; 6];
        for c in 0..6 {
            if !self.mask[c] {
                continue;
            }
            let (h, t) = (kappa.0[c], self.target.0[c]);
            match self.kind {
                ObjectiveKind::SquaredError => {
                    g += (h - t) * (h - t);
                    dg[c] = 2.0 * (h - t);
                }
                ObjectiveKind::RelativeSquaredError => {
                    let q = h / t - 1.0;
                    g += q * q;
                    dg[c] = 2.0 * q / t;
                }
                ObjectiveKind::L1 => {
                    let diff = h - t;
                    g += diff.abs();
                    // subgradient 0 at the kink
                    dg[c] = if diff > 0.0 {
                        1.0
                    } else if diff < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                }
            }
        }
        (g, dg)
    }
}

/// Principal-minor condition that failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Minor {
    /// Leading principal minor of the given order (1, 2 or 3).
    Leading(usize, f64),
    /// Off-diagonal slot exceeding `sqrt(κ_ii κ_jj)`.
    OffDiagonal { slot: usize, value: f64, bound: f64 },
    /// Diagonal outside `(0, κ0)`.
    Diagonal { slot: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub positive_definite: bool,
    pub violations: Vec<Minor>,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.positive_definite && self.violations.is_empty()
    }
}

/// Checks that a target is positive definite and that its off-diagonals obey
/// `|κ_ij| < sqrt(κ_ii κ_jj)` when the diagonals are attainable (`0 < κ_ii < κ0`).
pub fn feasibility_check(target: &ConductivityTensor, kappa0: f64) -> Feasibility {
    let mut violations = Vec::new();
    for (order, &m) in target.leading_minors().iter().enumerate() {
        if !(m > 0.0) {
            violations.push(Minor::Leading(order + 1, m));
        }
    }
    let positive_definite = violations.is_empty();
    let diag = [target.0[0], target.0[1], target.0[2]];
    let mut diag_ok = true;
    for (slot, &d) in diag.iter().enumerate() {
        if !(d > 0.0 && d < kappa0) {
            diag_ok = false;
            violations.push(Minor::Diagonal { slot, value: d });
        }
    }
    if diag_ok {
        for slot in 3..6 {
            let (i, j) = PACKED_PAIRS[slot];
            let bound = math::sqrt(diag[i] * diag[j]);
            let value = target.0[slot];
            if !(value.abs() < bound) {
                violations.push(Minor::OffDiagonal { slot, value, bound });
            }
        }
    }
    Feasibility {
        positive_definite,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: [f64; 6]) -> ConductivityTensor {
        ConductivityTensor(v)
    }

    #[test]
    fn perfect_match_is_zero() {
        let target = t([0.3, 0.2, 0.1, 0.05, 0.02, 0.01]);
        for kind in [
            ObjectiveKind::SquaredError,
            ObjectiveKind::RelativeSquaredError,
            ObjectiveKind::L1,
        ] {
            let spec = ObjectiveSpec::new(kind, target).unwrap();
            let (g, dg) = spec.eval(&target);
            assert_eq!(g, 0.0);
            assert_eq!(dg, [0.0; 6]);
        }
    }

    #[test]
    fn squared_error_single_term() {
        let spec = ObjectiveSpec::new(ObjectiveKind::SquaredError, t([0.3, 0.2, 0.1, 0.0, 0.0, 0.0])).unwrap();
        let (g, dg) = spec.eval(&t([0.4, 0.2, 0.1, 0.0, 0.0, 0.0]));
        assert!((g - 0.01).abs() < 1e-15);
        assert!((dg[0] - 0.2).abs() < 1e-15);
        assert_eq!(&dg[1..], &[0.0; 5]);
    }

    #[test]
    fn relative_rejects_zero_target() {
        let err = ObjectiveSpec::new(
            ObjectiveKind::RelativeSquaredError,
            t([0.3, 0.2, 0.1, 0.0, 0.0, 0.0]),
        );
        assert!(err.is_err());
        // masked components are not divided by
        assert!(ObjectiveSpec::with_mask(
            ObjectiveKind::RelativeSquaredError,
            t([0.3, 0.2, 0.1, 0.1, 0.0, 0.0]),
            [true, true, true, true, false, false]
        )
        .is_ok());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let target = t([0.3, 0.2, 0.1, 0.07, 0.03, 0.05]);
        let point = t([0.33, 0.17, 0.12, 0.02, 0.06, 0.041]);
        for kind in [
            ObjectiveKind::SquaredError,
            ObjectiveKind::RelativeSquaredError,
            ObjectiveKind::L1,
        ] {
            let spec = ObjectiveSpec::new(kind, target).unwrap();
            let (_, dg) = spec.eval(&point);
            for c in 0..6 {
                let h = 1e-6;
                let mut p = point;
                p.0[c] += h;
                let mut m = point;
                m.0[c] -= h;
                let fd = (spec.eval(&p).0 - spec.eval(&m).0) / (2.0 * h);
                let scale = dg[c].abs().max(1e-3);
                assert!(((fd - dg[c]) / scale).abs() < 1e-8, "{kind:?} slot {c}: {fd} vs {}", dg[c]);
            }
        }
    }

    #[test]
    fn l1_kink_has_zero_subgradient() {
        let spec = ObjectiveSpec::new(ObjectiveKind::L1, t([0.3, 0.2, 0.1, 0.0, 0.0, 0.0])).unwrap();
        let (g, dg) = spec.eval(&t([0.3, 0.25, 0.1, 0.0, 0.0, -0.1]));
        assert!((g - 0.15).abs() < 1e-15);
        assert_eq!(dg, [0.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn planar_mask_ignores_out_of_plane() {
        let spec = ObjectiveSpec::planar(ObjectiveKind::SquaredError, t([0.4, 0.2, 0.0, 0.05, 0.0, 0.0])).unwrap();
        let (g, dg) = spec.eval(&t([0.4, 0.2, 0.7, 0.05, 0.3, 0.3]));
        assert_eq!(g, 0.0);
        assert_eq!(dg, [0.0; 6]);
    }

    #[test]
    fn feasibility_examples() {
        let f = feasibility_check(&t([0.3, 0.2, 0.1, 0.24, 0.1, 0.1]), 1.0);
        assert!(f.positive_definite);
        assert!(f.is_feasible());
        assert!(0.24 < (0.06f64).sqrt());
        assert!(feasibility_check(&ConductivityTensor::isotropic(0.1), 1.0).is_feasible());
        let bad = feasibility_check(&t([0.3, 0.2, 0.1, 0.3, 0.0, 0.0]), 1.0);
        assert!(!bad.positive_definite);
        assert!(bad.violations.contains(&Minor::Leading(2, 0.3 * 0.2 - 0.09)));
        assert!(bad
            .violations
            .iter()
            .any(|v| matches!(v, Minor::OffDiagonal { slot: 3, .. })));
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("mse".parse::<ObjectiveKind>().unwrap(), ObjectiveKind::SquaredError);
        assert_eq!("REL".parse::<ObjectiveKind>().unwrap(), ObjectiveKind::RelativeSquaredError);
        assert!("l2".parse::<ObjectiveKind>().is_err());
    }
}
