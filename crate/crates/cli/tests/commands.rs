use std::path::Path;
use std::process::{Command, Output};

use opentm::gallery::{det3, enumerate, offdiag_values};
use opentm::io::{parse_kappa, parse_log, read_otm, write_otm};
use opentm_core::Dims;

fn opentm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opentm")).args(args).output().expect("spawn opentm")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn small_run(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--reso",
        "6",
        "--target",
        "0.3,0.2,0.1,0,0,0",
        "--max-iter",
        "4",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    opentm(&args)
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = small_run(&out, &["--vtk", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["rho.otm", "kappa.txt", "log.csv", "manifest.json", "rho.vti"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let (dims, rho) = read_otm(&out.join("rho.otm")).unwrap();
    assert_eq!(dims, Dims::new(6, 6, 6).unwrap());
    assert_eq!(rho.len(), 216);
    let rows = parse_log(&std::fs::read_to_string(out.join("log.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1].iter > w[0].iter));
    assert!(rows.iter().all(|r| r.g.is_finite()));
    let k = parse_kappa(&std::fs::read_to_string(out.join("kappa.txt")).unwrap()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(k[i][j], k[j][i]);
        }
    }
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["settings"]["dims"], serde_json::json!([6, 6, 6]));
    assert_eq!(m["result"]["iterations"], 4);
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&small_run(&a, &["--init", "random", "--seed", "3"])), 0);
    assert_eq!(code(&small_run(&b, &["--init", "random", "--seed", "3"])), 0);
    assert_eq!(std::fs::read(a.join("rho.otm")).unwrap(), std::fs::read(b.join("rho.otm")).unwrap());
    assert_eq!(std::fs::read(a.join("kappa.txt")).unwrap(), std::fs::read(b.join("kappa.txt")).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = out.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--out", o],
        vec!["run", "--target", "0.3,0.2", "--out", o],
        vec!["run", "--target", "0.3,0.2,0.1,0,0,0"],
        vec!["run", "--target", "0.3,0.2,0.1,0,0,0", "--model", "sgd", "--out", o],
        vec!["run", "--target", "0.3,0.2,0.1,0,0,0", "--init", "cube", "--out", o],
        vec!["run", "--target", "0.3,0.2,0.1,0,0,0", "--kappa", "1,2", "--out", o],
        vec!["run", "--target", "0.3,0.2,0.1,0,0,0", "--dims", "33,33,33", "--out", o],
        vec!["run", "--target", "0.3,0.2,0.1,0,0,0", "--filter-radius", "0.5", "--out", o],
        vec!["run", "--target", "0.3,0.2,0.1,0,0,0", "--volfrac", "1.5", "--out", o],
        vec!["run", "--bogus"],
        vec!["frobnicate"],
        vec!["homogenize", "--in", "/nonexistent/rho.otm"],
    ];
    for args in cases {
        let r = opentm(&args);
        let c = code(&r);
        // a missing input file is an I/O failure, everything else is usage
        if args[0] == "homogenize" {
            assert_ne!(c, 0, "{args:?}");
        } else {
            assert_eq!(c, 2, "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
        }
    }
    assert!(!out.exists());
}

#[test]
fn solver_failure_exits_3_and_keeps_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fail");
    let o = small_run(&out, &["--tol", "1e-30"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("log.csv").is_file());
    let m = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(m.contains("error"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"reso": 4, "target": [0.2, 0.2, 0.2, 0, 0, 0], "max_iter": 9, "seed": 11, "penalty": 2.0}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = opentm(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--max-iter",
        "2",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["settings"]["max_iter"], 2);
    assert_eq!(m["settings"]["seed"], 5);
    assert_eq!(m["settings"]["penalty"], 2.0);
    assert_eq!(m["settings"]["dims"], serde_json::json!([4, 4, 4]));
    let over: Vec<String> = serde_json::from_value(m["overridden_by_flags"].clone()).unwrap();
    assert_eq!(over, vec!["max-iter".to_string(), "seed".to_string()]);

    std::fs::write(&cfg, r#"{"target": [0.2, 0.2, 0.2, 0, 0, 0], "reslution": 4}"#).unwrap();
    let o = opentm(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn homogenize_solid_field_gives_kappa0() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rho.otm");
    write_otm(&path, Dims::new(8, 8, 8).unwrap(), &[1.0; 512]).unwrap();
    let o = opentm(&["homogenize", "--in", path.to_str().unwrap(), "--kappa", "2,0.001", "--penalty", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let k = parse_kappa(&String::from_utf8(o.stdout).unwrap()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 2.0 } else { 0.0 };
            assert!((k[i][j] - want).abs() < 1e-5, "{k:?}");
        }
    }
}

#[test]
fn homogenize_reproduces_run_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    // filter radius 1 leaves the stored field equal to the evaluated one
    assert_eq!(code(&small_run(&out, &["--filter-radius", "1", "--tol", "1e-10"])), 0);
    let o = opentm(&["homogenize", "--in", out.join("rho.otm").to_str().unwrap(), "--tol", "1e-10"]);
    assert_eq!(code(&o), 0);
    let got = parse_kappa(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let stored = parse_kappa(&std::fs::read_to_string(out.join("kappa.txt")).unwrap()).unwrap();
    // the run stops without a final update, so only f32 storage separates them
    for i in 0..3 {
        for j in 0..3 {
            assert!((got[i][j] - stored[i][j]).abs() < 1e-6, "{got:?} vs {stored:?}");
        }
    }
}

fn brute_det(m: [[f64; 3]; 3]) -> f64 {
    // Leibniz expansion over the six permutations
    let perms = [([0, 1, 2], 1.0), ([1, 2, 0], 1.0), ([2, 0, 1], 1.0), ([0, 2, 1], -1.0), ([2, 1, 0], -1.0), ([1, 0, 2], -1.0)];
    perms.iter().map(|(p, s)| s * m[0][p[0]] * m[1][p[1]] * m[2][p[2]]).sum()
}

#[test]
fn gallery_enumeration_counts() {
    let cases = enumerate([0.3, 0.2, 0.1], 0.05);
    assert_eq!(cases.len(), 96);
    assert_eq!(cases.iter().filter(|c| c.feasible()).count(), 61);
    assert_eq!(offdiag_values(0.06f64.sqrt(), 0.05), vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.24]);
    assert_eq!(offdiag_values(0.02f64.sqrt(), 0.05), vec![0.0, 0.05, 0.1, 0.14]);
    assert_eq!(offdiag_values(0.03f64.sqrt(), 0.05), vec![0.0, 0.05, 0.1, 0.15]);
}

#[test]
fn gallery_filter_matches_brute_force_determinant() {
    for c in enumerate([0.3, 0.2, 0.1], 0.05) {
        let [a, b, cc, d, e, f] = c.target;
        let m = [[a, d, f], [d, b, e], [f, e, cc]];
        let det = brute_det(m);
        assert!((det - det3(&c.target)).abs() < 1e-15);
        assert_eq!(c.feasible(), det > 1e-12, "{:?}", c.target);
    }
}

#[test]
fn gallery_runs_cases_in_isolated_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = opentm(&[
        "gallery",
        "--diag",
        "0.3,0.2,0.1",
        "--step",
        "0.05",
        "--out",
        out.to_str().unwrap(),
        "--reso",
        "4",
        "--max-iter",
        "2",
        "--limit",
        "3",
        "--workers",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "index,k11,k22,k33,k12,k23,k13,final_g,volfrac,seconds,status");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
    for i in 0..3 {
        assert!(out.join(format!("case_{i:03}")).join("rho.otm").is_file());
    }
    let cases = std::fs::read_to_string(out.join("cases.csv")).unwrap();
    assert_eq!(cases.lines().count(), 97);
}
