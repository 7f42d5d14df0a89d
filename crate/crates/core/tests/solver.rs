mod common;

use common::*;
use opentm_core::solver::{GridHierarchy, GridLevel, SolverConfig, SolverMethod, Transfer};
use opentm_core::Dims;

fn hierarchy(dims: Dims, weights: &[f64], method: SolverMethod, tol: f64) -> GridHierarchy {
    let cfg = SolverConfig {
        tol,
        method,
        ..SolverConfig::default()
    };
    let mut h = GridHierarchy::new(dims, cfg).unwrap();
    h.set_weights(weights).unwrap();
    h
}

#[test]
fn apply_matches_assembled_oracle() {
    let mut r = rng(1);
    for (case, n) in [4usize, 5, 6].iter().cycle().take(12).enumerate() {
        let dims = if case % 4 == 3 {
            Dims::new(*n, 4, 6).unwrap()
        } else {
            Dims::cube(*n).unwrap()
        };
        let w = random_vec(&mut r, dims.len(), 1e-4, 1.0);
        let x = random_vec(&mut r, dims.len(), -1.0, 1.0);
        let mut level = GridLevel::new(dims, [1.0; 3], 1.0);
        level.set_weights(&w).unwrap();
        let mut got = vec![0.0; dims.len()];
        level.apply(&x, &mut got);
        let want = sparse_apply(&oracle_assemble(dims, &w), &x);
        assert!(rel_err(&got, &want) < 1e-12, "case {case}");
    }
}

#[test]
fn apply_is_symmetric_and_linear() {
    let mut r = rng(2);
    let dims = Dims::cube(6).unwrap();
    let n = dims.len();
    let mut level = GridLevel::new(dims, [1.0; 3], 1.0);
    level.set_weights(&random_vec(&mut r, n, 0.01, 1.0)).unwrap();
    let a = random_vec(&mut r, n, -1.0, 1.0);
    let b = random_vec(&mut r, n, -1.0, 1.0);
    let (mut ka, mut kb) = (vec![0.0; n], vec![0.0; n]);
    level.apply(&a, &mut ka);
    level.apply(&b, &mut kb);
    let lhs = dot(&ka, &b);
    let rhs = dot(&a, &kb);
    assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
    let mut kc = vec![0.0; n];
    level.apply(&combo, &mut kc);
    for i in 0..n {
        assert!((kc[i] - (2.0 * ka[i] - 0.5 * kb[i])).abs() < 1e-12);
    }
}

#[test]
fn planar_grid_matches_oracle_with_aliasing() {
    let mut r = rng(3);
    let dims = Dims::new(6, 4, 1).unwrap();
    let w = random_vec(&mut r, dims.len(), 0.1, 1.0);
    let x = random_vec(&mut r, dims.len(), -1.0, 1.0);
    let mut level = GridLevel::new(dims, [1.0; 3], 1.0);
    level.set_weights(&w).unwrap();
    let mut got = vec![0.0; dims.len()];
    level.apply(&x, &mut got);
    let a = oracle_assemble(dims, &w);
    assert!(rel_err(&got, &sparse_apply(&a, &x)) < 1e-12);
    for (v, row) in a.iter().enumerate() {
        let d = row.iter().find(|e| e.0 == v).unwrap().1;
        assert!((level.diag()[v] - d).abs() < 1e-12);
    }
}

#[test]
fn relaxation_keeps_exact_solution_and_reduces_residual() {
    let dims = Dims::cube(8).unwrap();
    let n = dims.len();
    let mut r = rng(4);
    let w = vec![1.0; n];
    let a = oracle_assemble(dims, &w);
    let mut exact = random_vec(&mut r, n, -1.0, 1.0);
    zero_mean(&mut exact);
    let f = sparse_apply(&a, &exact);

    let mut level = GridLevel::new(dims, [1.0; 3], 1.0);
    level.set_weights(&w).unwrap();
    level.f.copy_from_slice(&f);
    level.t.copy_from_slice(&exact);
    level.relax(false);
    assert!(rel_err(&level.t, &exact) < 1e-12);

    level.t.iter_mut().for_each(|v| *v = 0.0);
    level.update_residual();
    let r0 = dot(&level.r, &level.r).sqrt();
    for _ in 0..10 {
        level.relax(false);
    }
    level.update_residual();
    let r10 = dot(&level.r, &level.r).sqrt();
    assert!(r10 < r0, "{r10} !< {r0}");
}

#[test]
fn restriction_is_scaled_adjoint_of_prolongation() {
    let t = Transfer::new(Dims::cube(8).unwrap(), Dims::cube(4).unwrap());
    let mut r = rng(5);
    let a = random_vec(&mut r, 512, -1.0, 1.0);
    let b = random_vec(&mut r, 64, -1.0, 1.0);
    let mut ra = vec![0.0; 64];
    t.restrict(&a, &mut ra);
    let mut ib = vec![0.0; 512];
    t.prolong_add(&b, &mut ib);
    let lhs = dot(&ra, &b);
    let rhs = t.scale() * dot(&a, &ib);
    assert_eq!(t.scale(), 0.125);
    assert!((lhs - rhs).abs() < 1e-12);
}

#[test]
fn coarse_solve_cases() {
    let dims = Dims::cube(4).unwrap();
    let mut r = rng(6);
    let w = random_vec(&mut r, 64, 0.1, 1.0);
    let mut h = hierarchy(dims, &w, SolverMethod::VCycle, 1e-10);
    assert_eq!(h.num_levels(), 1);

    let mut t = vec![1.0; 64];
    let stats = h.solve(&vec![0.0; 64], &mut t).unwrap();
    assert_eq!(stats.cycles, 0);
    assert!(t.iter().all(|&v| v == 0.0));

    let a = oracle_assemble(dims, &w);
    let mut x = random_vec(&mut r, 64, -1.0, 1.0);
    zero_mean(&mut x);
    let f = sparse_apply(&a, &x);
    let mut t = vec![0.0; 64];
    let stats = h.solve(&f, &mut t).unwrap();
    assert!(stats.residual < 1e-10);
    assert!(rel_err(&t, &x) < 1e-9);

    // an incompatible load has its mean projected out
    let shifted: Vec<f64> = f.iter().map(|v| v + 0.3).collect();
    let mut t2 = vec![0.0; 64];
    h.solve(&shifted, &mut t2).unwrap();
    assert!(rel_err(&t2, &x) < 1e-9);
}

#[test]
fn solve_matches_cg_oracle_and_is_deterministic() {
    let dims = Dims::cube(16).unwrap();
    let n = dims.len();
    let mut r = rng(7);
    let w = random_vec(&mut r, n, 0.1, 1.0);
    let mut f = random_vec(&mut r, n, -1.0, 1.0);
    zero_mean(&mut f);
    let a = oracle_assemble(dims, &w);
    let reference = oracle_cg(&a, &f, 1e-12);
    for method in [SolverMethod::VCycle, SolverMethod::Pcg] {
        let mut h = hierarchy(dims, &w, method, 1e-8);
        let mut t1 = vec![0.0; n];
        let s = h.solve(&f, &mut t1).unwrap();
        assert!(s.residual <= 1e-8);
        assert!(rel_err(&t1, &reference) < 1e-4, "{method:?}");
        assert!(t1.iter().sum::<f64>().abs() / (n as f64) < 1e-10);
        let mut t2 = vec![0.0; n];
        h.solve(&f, &mut t2).unwrap();
        assert_eq!(t1, t2);
        // adding a constant to the initial guess does not change the result
        let mut t3 = vec![5.0; n];
        h.solve(&f, &mut t3).unwrap();
        assert!(rel_err(&t3, &reference) < 1e-4);
    }
}

#[test]
fn vcycle_contraction_on_random_density() {
    let dims = Dims::cube(16).unwrap();
    let n = dims.len();
    let mut r = rng(8);
    let w = random_vec(&mut r, n, 0.1, 1.0);
    let mut f = random_vec(&mut r, n, -1.0, 1.0);
    zero_mean(&mut f);
    let mut h = hierarchy(dims, &w, SolverMethod::VCycle, 1e-8);
    let mut t = vec![0.0; n];
    let s = h.solve(&f, &mut t).unwrap();
    let rho = s.mean_contraction();
    assert!(rho <= 0.7, "contraction {rho}");
}

#[test]
fn solution_translates_with_the_lattice() {
    let dims = Dims::cube(8).unwrap();
    let n = dims.len();
    let mut r = rng(9);
    let w = random_vec(&mut r, n, 0.1, 1.0);
    let mut f = random_vec(&mut r, n, -1.0, 1.0);
    zero_mean(&mut f);
    let shift = |v: &[f64]| {
        let mut out = vec![0.0; n];
        for idx in 0..n {
            let (i, j, k) = dims.coords(idx);
            out[dims.index((i + 3) % 8, (j + 1) % 8, (k + 5) % 8)] = v[idx];
        }
        out
    };
    let mut h = hierarchy(dims, &w, SolverMethod::Pcg, 1e-10);
    let mut t = vec![0.0; n];
    h.solve(&f, &mut t).unwrap();
    let mut hs = hierarchy(dims, &shift(&w), SolverMethod::Pcg, 1e-10);
    let mut ts = vec![0.0; n];
    hs.solve(&shift(&f), &mut ts).unwrap();
    assert!(rel_err(&ts, &shift(&t)) < 1e-7);
}

#[test]
fn rejects_grids_without_enough_factors_of_two() {
    assert!(GridHierarchy::new(Dims::cube(13).unwrap(), SolverConfig::default()).is_err());
    assert!(GridHierarchy::new(Dims::new(100, 100, 1).unwrap(), SolverConfig::default()).is_ok());
}

#[test]
fn convergence_failure_reports_residual() {
    let dims = Dims::cube(16).unwrap();
    let n = dims.len();
    let mut r = rng(10);
    let w = random_vec(&mut r, n, 0.1, 1.0);
    let mut f = random_vec(&mut r, n, -1.0, 1.0);
    zero_mean(&mut f);
    let mut h = GridHierarchy::new(
        dims,
        SolverConfig {
            tol: 1e-12,
            max_cycles: 2,
            method: SolverMethod::VCycle,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    h.set_weights(&w).unwrap();
    let mut t = vec![0.0; n];
    match h.solve(&f, &mut t) {
        Err(opentm_core::Error::Convergence { cycles, residual }) => {
            assert_eq!(cycles, 2);
            assert!(residual > 1e-12);
        }
        other => panic!("{other:?}"),
    }
}
