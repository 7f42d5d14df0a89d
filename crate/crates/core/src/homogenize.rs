//! Unit-gradient load cases, the homogenized conductivity tensor and its
//! sensitivities with respect to the filtered densities.

use alloc::vec;
use alloc::vec::Vec;

use crate::element::{ElementTemplates, MaterialParams};
use crate::error::{Error, Result};
use crate::grid::{element_vertices, Dims, Neighbors};
use crate::math;
use crate::solver::{GridHierarchy, SolveStats, SolverConfig};
use crate::tensor::{ConductivityTensor, PACKED_PAIRS};

/// Tensor of one evaluation plus the corrective temperature fields.
#[derive(Debug, Clone)]
pub struct HomogenizationResult {
    pub tensor: ConductivityTensor,
    /// Corrective fields `T^(i)` for the three axes.
    pub fields: [Vec<f64>; 3],
    pub stats: [SolveStats; 3],
}

impl HomogenizationResult {
    pub fn total_cycles(&self) -> usize {
        self.stats.iter().map(|s| s.cycles).sum()
    }
}

#[derive(Debug, Clone)]
struct Cache {
    rho_filtered: Vec<f64>,
    /// `(T0_i − T_i)ᵀ K0 (T0_j − T_j)` per element in packed order.
    energies: Vec<[f64; 6]>,
}

/// Reusable homogenization state for one grid: the multigrid hierarchy, the
/// warm-start fields and the per-element cache for sensitivities.
#[derive(Debug, Clone)]
pub struct Homogenizer {
    dims: Dims,
    nb: Neighbors,
    templates: ElementTemplates,
    material: MaterialParams,
    hierarchy: GridHierarchy,
    fields: [Vec<f64>; 3],
    cache: Option<Cache>,
}

impl Homogenizer {
    pub fn new(dims: Dims, material: MaterialParams, solver: SolverConfig) -> Result<Self> {
        let n = dims.len();
        Ok(Homogenizer {
            dims,
            nb: Neighbors::new(dims),
            templates: ElementTemplates::build(),
            material,
            hierarchy: GridHierarchy::new(dims, solver)?,
            fields: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            cache: None,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn material(&self) -> &MaterialParams {
        &self.material
    }

    pub fn hierarchy(&self) -> &GridHierarchy {
        &self.hierarchy
    }

    pub fn solver_config_mut(&mut self) -> &mut SolverConfig {
        &mut self.hierarchy.config
    }

    /// Forgets the warm-start fields.
    pub fn reset_warm_start(&mut self) {
        for f in self.fields.iter_mut() {
            f.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Per-element SIMP conductivities.
    pub fn conductivities(&self, rho_filtered: &[f64]) -> Vec<f64> {
        rho_filtered
            .iter()
            .map(|&r| self.material.conductivity(r))
            .collect()
    }

    /// `f_v = Σ_e κ_e f0[local(v, e), case]` over the incident elements.
    pub fn assemble_macro_load(&self, weights: &[f64], case: usize) -> Vec<f64> {
        let d = self.dims;
        let mut f = vec![0.0; d.len()];
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let w = weights[d.index(i, j, k)];
                    let verts = element_vertices(&d, &self.nb, i, j, k);
                    for (a, &v) in verts.iter().enumerate() {
                        f[v] += w * self.templates.f0[a][case];
                    }
                }
            }
        }
        f
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dims.len() {
            return Err(Error::ShapeMismatch {
                expected: self.dims.len(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Solves the three periodic load cases, warm-starting from the previous
    /// fields. A load at round-off level relative to the conductivities (a
    /// uniform field) is treated as zero.
    pub fn solve_cases(&mut self, rho_filtered: &[f64]) -> Result<[SolveStats; 3]> {
        self.check_len(rho_filtered.len())?;
        let weights = self.conductivities(rho_filtered);
        self.hierarchy.set_weights(&weights)?;
        let noise = 1e-13 * math::norm(&weights);
        let mut stats: [SolveStats; 3] = Default::default();
        for (case, st) in stats.iter_mut().enumerate() {
            let mut load = self.assemble_macro_load(&weights, case);
            if math::norm(&load) <= noise {
                load.iter_mut().for_each(|v| *v = 0.0);
            }
            *st = self.hierarchy.solve(&load, &mut self.fields[case])?;
        }
        Ok(stats)
    }

    /// Full evaluation: load cases, per-element energies and `κ^H`.
    pub fn evaluate(&mut self, rho_filtered: &[f64]) -> Result<HomogenizationResult> {
        let stats = self.solve_cases(rho_filtered)?;
        let energies = self.element_energies();
        let tensor = self.effective_tensor_from(rho_filtered, &energies);
        self.cache = Some(Cache {
            rho_filtered: rho_filtered.to_vec(),
            energies,
        });
        Ok(HomogenizationResult {
            tensor,
            fields: self.fields.clone(),
            stats,
        })
    }

    fn element_energies(&self) -> Vec<[f64; 6]> {
        let d = self.dims;
        let k0 = &self.templates.k0;
        let t0 = &self.templates.t0;
        let mut out = vec![[0.0; 6]; d.len()];
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let verts = element_vertices(&d, &self.nb, i, j, k);
                    let mut diff = [[0.0; 8]; 3];
                    for c in 0..3 {
                        for a in 0..8 {
                            diff[c][a] = t0[a][c] - self.fields[c][verts[a]];
                        }
                    }
                    let mut kd = [[0.0; 8]; 3];
                    for c in 0..3 {
                        for a in 0..8 {
                            kd[c][a] = (0..8).map(|b| k0[a][b] * diff[c][b]).sum();
                        }
                    }
                    let e = &mut out[d.index(i, j, k)];
                    for (slot, &(p, q)) in PACKED_PAIRS.iter().enumerate() {
                        e[slot] = (0..8).map(|a| diff[p][a] * kd[q][a]).sum();
                    }
                }
            }
        }
        out
    }

    fn effective_tensor_from(&self, rho_filtered: &[f64], energies: &[[f64; 6]]) -> ConductivityTensor {
        let volume = self.dims.len() as f64;
        let mut packed = [0.0; 6];
        for (slot, p) in packed.iter_mut().enumerate() {
            let terms: Vec<f64> = rho_filtered
                .iter()
                .zip(energies)
                .map(|(&r, e)| self.material.conductivity(r) * e[slot])
                .collect();
            *p = math::pairwise_sum(&terms) / volume;
        }
        ConductivityTensor(packed)
    }

    /// `κ^H` from the most recent evaluation.
    pub fn effective_tensor(&self) -> Result<ConductivityTensor> {
        let cache = self.cache()?;
        Ok(self.effective_tensor_from(&cache.rho_filtered, &cache.energies))
    }

    /// Computes `κ_ij` and `κ_ji` from separately ordered products; used to
    /// check symmetry of the discrete form.
    pub fn entry_unsymmetrized(&self, i: usize, j: usize) -> Result<f64> {
        let cache = self.cache()?;
        let d = self.dims;
        let k0 = &self.templates.k0;
        let t0 = &self.templates.t0;
        let mut terms = vec![0.0; d.len()];
        for k in 0..d.nz {
            for jj in 0..d.ny {
                for ii in 0..d.nx {
                    let e = d.index(ii, jj, k);
                    let verts = element_vertices(&d, &self.nb, ii, jj, k);
                    let di: [f64; 8] = core::array::from_fn(|a| t0[a][i] - self.fields[i][verts[a]]);
                    let dj: [f64; 8] = core::array::from_fn(|a| t0[a][j] - self.fields[j][verts[a]]);
                    let mut s = 0.0;
                    for a in 0..8 {
                        for b in 0..8 {
                            s += di[a] * k0[a][b] * dj[b];
                        }
                    }
                    terms[e] = self.material.conductivity(cache.rho_filtered[e]) * s;
                }
            }
        }
        Ok(math::pairwise_sum(&terms) / d.len() as f64)
    }

    fn cache(&self) -> Result<&Cache> {
        self.cache
            .as_ref()
            .ok_or_else(|| Error::State("no homogenization result cached; call evaluate first".into()))
    }

    /// `∂g/∂ρ̃_e = Σ_c w_c ∂κ_c/∂ρ̃_e` where `w_c` is the derivative of the
    /// objective with respect to packed component `c` (each off-diagonal pair
    /// counted once).
    pub fn tensor_sensitivity(&self, weights: &[f64; 6]) -> Result<Vec<f64>> {
        let cache = self.cache()?;
        let inv_volume = 1.0 / self.dims.len() as f64;
        Ok(cache
            .rho_filtered
            .iter()
            .zip(&cache.energies)
            .map(|(&r, e)| {
                let contracted: f64 = (0..6).map(|c| weights[c] * e[c]).sum();
                self.material.conductivity_derivative(r) * contracted * inv_volume
            })
            .collect())
    }

    /// Per-element `∂κ_c/∂ρ̃_e` for one packed component.
    pub fn component_sensitivity(&self, slot: usize) -> Result<Vec<f64>> {
        let mut w = [0.0; 6];
        w[slot] = 1.0;
        self.tensor_sensitivity(&w)
    }
}
