#![allow(dead_code)]

use opentm_core::Dims;
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, lo, hi)).collect()
}

/// Closed-form unit-cube conduction matrix built from 1D linear elements.
pub fn oracle_k0() -> [[f64; 8]; 8] {
    let corner = |a: usize| [a & 1, (a >> 1) & 1, (a >> 2) & 1];
    let mass = |a: usize, b: usize| if a == b { 1.0 / 3.0 } else { 1.0 / 6.0 };
    let stiff = |a: usize, b: usize| if a == b { 1.0 } else { -1.0 };
    let mut k = [[0.0; 8]; 8];
    for a in 0..8 {
        for b in 0..8 {
            let (ca, cb) = (corner(a), corner(b));
            let mut s = 0.0;
            for d in 0..3 {
                let mut t = stiff(ca[d], cb[d]);
                for e in 0..3 {
                    if e != d {
                        t *= mass(ca[e], cb[e]);
                    }
                }
                s += t;
            }
            k[a][b] = s;
        }
    }
    k
}

/// Sparse (row → (col, val)) periodic stiffness assembled element by element.
pub fn oracle_assemble(dims: Dims, weights: &[f64]) -> Vec<Vec<(usize, f64)>> {
    let k0 = oracle_k0();
    let n = dims.len();
    let mut dense_rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    for k in 0..dims.nz {
        for j in 0..dims.ny {
            for i in 0..dims.nx {
                let e = i + dims.nx * (j + dims.ny * k);
                let mut verts = [0usize; 8];
                for a in 0..8 {
                    let (ci, cj, ck) = (a & 1, (a >> 1) & 1, (a >> 2) & 1);
                    verts[a] = (i + ci) % dims.nx
                        + dims.nx * ((j + cj) % dims.ny + dims.ny * ((k + ck) % dims.nz));
                }
                for a in 0..8 {
                    for b in 0..8 {
                        *dense_rows[verts[a]].entry(verts[b]).or_insert(0.0) +=
                            weights[e] * k0[a][b];
                    }
                }
            }
        }
    }
    dense_rows.into_iter().map(|r| r.into_iter().collect()).collect()
}

pub fn sparse_apply(a: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().map(|&(c, v)| v * x[c]).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn zero_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Plain conjugate gradients in the zero-mean subspace.
pub fn oracle_cg(a: &[Vec<(usize, f64)>], b: &[f64], tol: f64) -> Vec<f64> {
    let n = b.len();
    let mut rhs = b.to_vec();
    zero_mean(&mut rhs);
    let bn = dot(&rhs, &rhs).sqrt();
    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..20 * n {
        if rr.sqrt() <= tol * bn {
            break;
        }
        let q = sparse_apply(a, &p);
        let alpha = rr / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        zero_mean(&mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    zero_mean(&mut x);
    x
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}
