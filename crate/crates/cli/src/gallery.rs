//! Batch traversal of off-diagonal targets around a fixed diagonal.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::config::{Resolved, Settings};
use crate::error::{CliError, CliResult};
use crate::io::{prepare_dir, write_atomic};
use crate::run;

/// Cases whose determinant is at or below this are treated as singular.
pub const DET_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryCase {
    /// Position in the raw enumeration.
    pub index: usize,
    /// `[k11, k22, k33, k12, k23, k13]`.
    pub target: [f64; 6],
    pub det: f64,
}

impl GalleryCase {
    pub fn feasible(&self) -> bool {
        self.det > DET_EPS
    }
}

pub fn det3(t: &[f64; 6]) -> f64 {
    let [a, b, c, d, e, f] = *t;
    a * (b * c - e * e) - d * (d * c - e * f) + f * (d * e - b * f)
}

/// Candidate values of one off-diagonal entry: multiples of `step` strictly
/// below `bound`, plus `bound` rounded down to two decimals when that is
/// clearly past the last multiple.
pub fn offdiag_values(bound: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let v = k as f64 * step;
        if v >= bound - 1e-12 {
            break;
        }
        // keep the decimal representation clean
        out.push((v * 1e9).round() / 1e9);
        k += 1;
    }
    let edge = (bound * 100.0).floor() / 100.0;
    if let Some(&last) = out.last() {
        if edge > last + 0.5 * step {
            out.push(edge);
        }
    }
    out
}

/// All raw combinations, k12 slowest and k13 fastest.
pub fn enumerate(diag: [f64; 3], step: f64) -> Vec<GalleryCase> {
    let [a, b, c] = diag;
    let v12 = offdiag_values((a * b).sqrt(), step);
    let v23 = offdiag_values((b * c).sqrt(), step);
    let v13 = offdiag_values((a * c).sqrt(), step);
    let mut cases = Vec::with_capacity(v12.len() * v23.len() * v13.len());
    for &d in &v12 {
        for &e in &v23 {
            for &f in &v13 {
                let target = [a, b, c, d, e, f];
                cases.push(GalleryCase {
                    index: cases.len(),
                    target,
                    det: det3(&target),
                });
            }
        }
    }
    cases
}

#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub case: GalleryCase,
    pub result: Result<run::RunReport, String>,
}

#[derive(Debug, Clone)]
pub struct GalleryOptions {
    pub diag: [f64; 3],
    pub step: f64,
    pub out: PathBuf,
    pub reso: usize,
    pub workers: usize,
    /// Run only the first `limit` feasible cases.
    pub limit: Option<usize>,
    pub max_iter: usize,
    pub enumerate_only: bool,
}

fn fmt_target(t: &[f64; 6]) -> String {
    t.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn format_cases(cases: &[GalleryCase]) -> String {
    let mut s = String::from("index,k11,k22,k33,k12,k23,k13,det,feasible\n");
    for c in cases {
        s.push_str(&format!("{},{},{:e},{}\n", c.index, fmt_target(&c.target), c.det, c.feasible()));
    }
    s
}

pub fn format_summary(outcomes: &[CaseOutcome]) -> String {
    let mut s = String::from("index,k11,k22,k33,k12,k23,k13,final_g,volfrac,seconds,status\n");
    for o in outcomes {
        let t = fmt_target(&o.case.target);
        match &o.result {
            Ok(r) => s.push_str(&format!(
                "{},{t},{:e},{},{:.3},ok\n",
                o.case.index, r.final_g, r.volfrac, r.seconds
            )),
            Err(e) => s.push_str(&format!(
                "{},{t},,,,{}\n",
                o.case.index,
                csv_quote(&format!("failed: {e}"))
            )),
        }
    }
    s
}

fn case_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("case_{index:03}"))
}

/// Runs every feasible case (up to `limit`) in a pool of `workers` threads.
/// A failing case is recorded and the batch carries on.
pub fn run_gallery(opts: &GalleryOptions, base: &Settings) -> CliResult<Vec<CaseOutcome>> {
    if !(opts.step > 0.0) {
        return Err(CliError::Usage("--step must be positive".into()));
    }
    if opts.diag.iter().any(|&d| !(d > 0.0)) {
        return Err(CliError::Usage("--diag entries must be positive".into()));
    }
    prepare_dir(&opts.out)?;
    let cases = enumerate(opts.diag, opts.step);
    write_atomic(&opts.out.join("cases.csv"), format_cases(&cases).as_bytes())?;
    let mut feasible: Vec<GalleryCase> = cases.into_iter().filter(|c| c.feasible()).collect();
    if let Some(n) = opts.limit {
        feasible.truncate(n);
    }
    log::info!("gallery: {} cases to run", feasible.len());
    if opts.enumerate_only {
        return Ok(Vec::new());
    }
    // catch bad settings once, up front, instead of in every case
    let mut probe = base.clone();
    probe.dims = [opts.reso; 3];
    probe.max_iter = opts.max_iter;
    probe.to_run_config()?;

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CaseOutcome>>> = Mutex::new(vec![None; feasible.len()]);
    let workers = opts.workers.clamp(1, feasible.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(case) = feasible.get(i) else { break };
                let mut settings = probe.clone();
                settings.target = case.target;
                let resolved = Resolved {
                    settings,
                    out: None,
                    overridden: Vec::new(),
                    config_file: None,
                };
                let t0 = Instant::now();
                let result = run::execute(&resolved, &case_dir(&opts.out, case.index)).map_err(|e| e.to_string());
                match &result {
                    Ok(r) => log::info!(
                        "case {:03} [{}] g {:.3e} vol {:.4} ({:.1}s)",
                        case.index,
                        fmt_target(&case.target),
                        r.final_g,
                        r.volfrac,
                        t0.elapsed().as_secs_f64()
                    ),
                    Err(e) => log::warn!("case {:03} failed: {e}", case.index),
                }
                slots.lock().unwrap()[i] = Some(CaseOutcome {
                    case: case.clone(),
                    result,
                });
            });
        }
    });
    let outcomes: Vec<CaseOutcome> = slots.into_inner().unwrap().into_iter().flatten().collect();
    write_atomic(&opts.out.join("summary.csv"), format_summary(&outcomes).as_bytes())?;
    Ok(outcomes)
}
