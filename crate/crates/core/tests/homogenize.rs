mod common;

use common::*;
use opentm_core::{
    ConductivityTensor, Dims, Filter, FilterSpec, Homogenizer, MaterialParams, ObjectiveKind, ObjectiveSpec,
    SolverConfig,
};

fn solver(tol: f64) -> SolverConfig {
    SolverConfig {
        tol,
        ..SolverConfig::default()
    }
}

fn tensor_of(dims: Dims, mat: MaterialParams, rho: &[f64], tol: f64) -> ConductivityTensor {
    let mut h = Homogenizer::new(dims, mat, solver(tol)).unwrap();
    h.evaluate(rho).unwrap().tensor
}

#[test]
fn homogeneous_solid_and_void() {
    let dims = Dims::cube(16).unwrap();
    let mat = MaterialParams::default();
    let solid = tensor_of(dims, mat, &vec![1.0; dims.len()], 1e-8);
    let expect = ConductivityTensor::isotropic(mat.kappa0);
    assert!(solid.max_abs_diff(&expect) < 1e-5, "{solid:?}");
    let void = tensor_of(dims, mat, &vec![0.0; dims.len()], 1e-8);
    let expect = ConductivityTensor::isotropic(mat.kappa_min);
    assert!(void.max_abs_diff(&expect) < 1e-8, "{void:?}");
}

fn laminate(n: usize) -> (Dims, Vec<f64>) {
    let dims = Dims::cube(n).unwrap();
    let rho = (0..dims.len())
        .map(|e| if dims.coords(e).2 < n / 2 { 1.0 } else { 0.0 })
        .collect();
    (dims, rho)
}

#[test]
fn laminate_gives_series_and_parallel_means() {
    let mat = MaterialParams::new(1.0, 1e-4, 1.0).unwrap();
    let arithmetic = 0.5 * (mat.kappa0 + mat.kappa_min);
    let harmonic = 2.0 / (1.0 / mat.kappa0 + 1.0 / mat.kappa_min);
    for n in [16, 32] {
        let (dims, rho) = laminate(n);
        let t = tensor_of(dims, mat, &rho, 1e-10);
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(t.get(0, 0), arithmetic) < 5e-3, "n={n} k11={}", t.get(0, 0));
        assert!(rel(t.get(1, 1), arithmetic) < 5e-3, "n={n} k22={}", t.get(1, 1));
        assert!(rel(t.get(2, 2), harmonic) < 5e-3, "n={n} k33={}", t.get(2, 2));
        for slot in 3..6 {
            assert!(t.0[slot].abs() < 1e-6);
        }
    }
}

#[test]
fn sensitivities_match_finite_differences() {
    let dims = Dims::cube(6).unwrap();
    let mat = MaterialParams::default();
    let filter = Filter::new(dims, &FilterSpec::cone(1.5).unwrap());
    let spec = ObjectiveSpec::new(
        ObjectiveKind::SquaredError,
        ConductivityTensor([0.3, 0.2, 0.1, 0.05, 0.02, 0.01]),
    )
    .unwrap();
    let mut r = rng(7);
    let rho = random_vec(&mut r, dims.len(), 0.2, 0.9);
    let mut h = Homogenizer::new(dims, mat, solver(1e-8)).unwrap();
    let mut g_of = |x: &[f64]| {
        let t = h.evaluate(&filter.forward(x).unwrap()).unwrap().tensor;
        spec.eval(&t)
    };
    let (_, dg) = g_of(&rho);
    let mut h2 = Homogenizer::new(dims, mat, solver(1e-8)).unwrap();
    h2.evaluate(&filter.forward(&rho).unwrap()).unwrap();
    let grad = filter.backward(&h2.tensor_sensitivity(&dg).unwrap()).unwrap();
    let scale = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let step = 1e-4;
    for _ in 0..30 {
        let e = (uniform(&mut r, 0.0, 1.0) * dims.len() as f64) as usize % dims.len();
        let mut plus = rho.clone();
        plus[e] += step;
        let mut minus = rho.clone();
        minus[e] -= step;
        let fd = (g_of(&plus).0 - g_of(&minus).0) / (2.0 * step);
        let err = (fd - grad[e]).abs() / grad[e].abs().max(1e-2 * scale);
        assert!(err < 1e-3, "element {e}: fd {fd} analytic {}", grad[e]);
    }
}

#[test]
fn discrete_tensor_is_symmetric() {
    let dims = Dims::new(8, 4, 6).unwrap();
    let mut r = rng(11);
    let rho = random_vec(&mut r, dims.len(), 0.0, 1.0);
    let mut h = Homogenizer::new(dims, MaterialParams::default(), solver(1e-10)).unwrap();
    h.evaluate(&rho).unwrap();
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let a = h.entry_unsymmetrized(i, j).unwrap();
        let b = h.entry_unsymmetrized(j, i).unwrap();
        assert!((a - b).abs() < 1e-8 * a.abs().max(1e-4), "{a} vs {b}");
    }
}

#[test]
fn axis_permutation_permutes_tensor() {
    let n = 8;
    let dims = Dims::cube(n).unwrap();
    let mut r = rng(3);
    let rho = random_vec(&mut r, dims.len(), 0.0, 1.0);
    // swap x and y
    let swapped: Vec<f64> = (0..dims.len())
        .map(|e| {
            let (i, j, k) = dims.coords(e);
            rho[dims.index(j, i, k)]
        })
        .collect();
    let mat = MaterialParams::default();
    let a = tensor_of(dims, mat, &rho, 1e-10);
    let b = tensor_of(dims, mat, &swapped, 1e-10);
    let tol = 1e-7;
    assert!((a.get(0, 0) - b.get(1, 1)).abs() < tol);
    assert!((a.get(1, 1) - b.get(0, 0)).abs() < tol);
    assert!((a.get(2, 2) - b.get(2, 2)).abs() < tol);
    assert!((a.get(0, 1) - b.get(0, 1)).abs() < tol);
    assert!((a.get(0, 2) - b.get(1, 2)).abs() < tol);
    assert!((a.get(1, 2) - b.get(0, 2)).abs() < tol);
}

#[test]
fn more_material_conducts_more() {
    let dims = Dims::cube(8).unwrap();
    let mut r = rng(5);
    let rho = random_vec(&mut r, dims.len(), 0.1, 0.8);
    let denser: Vec<f64> = rho.iter().map(|v| v + 0.1).collect();
    let mat = MaterialParams::default();
    let a = tensor_of(dims, mat, &rho, 1e-10);
    let b = tensor_of(dims, mat, &denser, 1e-10);
    for d in 0..3 {
        assert!(b.get(d, d) > a.get(d, d));
    }
    assert!(a.is_positive_definite());
}

#[test]
fn warm_start_reduces_cycles() {
    let dims = Dims::cube(16).unwrap();
    let mut r = rng(9);
    let rho = random_vec(&mut r, dims.len(), 0.1, 1.0);
    let mut h = Homogenizer::new(dims, MaterialParams::default(), solver(1e-8)).unwrap();
    let cold = h.evaluate(&rho).unwrap().total_cycles();
    let nudged: Vec<f64> = rho.iter().map(|v| v * 0.999).collect();
    let warm = h.evaluate(&nudged).unwrap().total_cycles();
    assert!(warm < cold, "warm {warm} cold {cold}");
    h.reset_warm_start();
    let again = h.evaluate(&nudged).unwrap().total_cycles();
    assert!(again > warm);
}
