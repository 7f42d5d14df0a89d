//! The `run` subcommand: one optimization with its output directory.

use std::path::Path;
use std::time::Instant;

use serde_json::json;

use opentm_core::{ConductivityTensor, Optimizer, StopReason};

use crate::config::Resolved;
use crate::error::{CliError, CliResult};
use crate::io::{format_kappa, format_log, format_vti, prepare_dir, write_atomic, write_otm, LogRow, OutputPaths};

#[derive(Debug, Clone)]
pub struct RunReport {
    pub stop: StopReason,
    pub iterations: usize,
    pub final_g: f64,
    pub volfrac: f64,
    pub tensor: ConductivityTensor,
    pub seconds: f64,
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::Converged => "converged",
        StopReason::AlreadyOptimal => "already-optimal",
        StopReason::MaxIterations => "max-iterations",
    }
}

fn manifest(resolved: &Resolved, result: serde_json::Value) -> String {
    let m = json!({
        "program": "opentm",
        "version": env!("CARGO_PKG_VERSION"),
        "settings": resolved.settings,
        "seed": resolved.settings.seed,
        "config_file": resolved.config_file,
        "overridden_by_flags": resolved.overridden,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
    s.push('\n');
    s
}

/// Runs the optimization and writes every output into `out`. On a solver
/// failure the log so far and a manifest naming the error are still written.
pub fn execute(resolved: &Resolved, out: &Path) -> CliResult<RunReport> {
    let config = resolved.settings.to_run_config()?;
    let dims = config.dims;
    prepare_dir(out)?;
    let paths = OutputPaths::in_dir(out);
    let started = Instant::now();
    let mut opt = Optimizer::new(config).map_err(CliError::runtime)?;
    let mut rows = Vec::new();
    let mut last = None;
    while !opt.is_finished() {
        let t0 = Instant::now();
        match opt.step() {
            Ok(rec) => {
                let ms = t0.elapsed().as_secs_f64() * 1e3;
                log::info!(
                    "iter {:4} g {:.4e} vol {:.4} v* {:.4} cycles {}",
                    rec.iter,
                    rec.g,
                    rec.volfrac,
                    rec.vstar,
                    rec.vcycles
                );
                rows.push(LogRow {
                    iter: rec.iter,
                    g: rec.g,
                    volfrac: rec.volfrac,
                    vstar: rec.vstar,
                    vcycles: rec.vcycles,
                    ms,
                });
                last = Some(rec);
            }
            Err(e) => {
                let err = CliError::runtime(e);
                write_atomic(&paths.log, format_log(&rows).as_bytes())?;
                let result = json!({ "error": err.to_string(), "iterations": rows.len() });
                write_atomic(&paths.manifest, manifest(resolved, result).as_bytes())?;
                return Err(err);
            }
        }
    }
    let rec = last.ok_or_else(|| CliError::Usage("no iterations were run (max-iter 0?)".into()))?;
    let stop = rec.stop.unwrap_or(StopReason::MaxIterations);
    let seconds = started.elapsed().as_secs_f64();
    let rho = &opt.field().rho;

    write_otm(&paths.rho, dims, rho)?;
    write_atomic(&paths.kappa, format_kappa(&rec.tensor).as_bytes())?;
    write_atomic(&paths.log, format_log(&rows).as_bytes())?;
    if resolved.settings.vtk {
        write_atomic(&paths.vti, format_vti(dims, rho).as_bytes())?;
    }
    let result = json!({
        "stop": stop_name(stop),
        "iterations": rec.iter,
        "final_g": rec.g,
        "volfrac": rec.volfrac,
        "volfrac_filtered": rec.volfrac_filtered,
        "vstar": rec.vstar,
        "kappa": rec.tensor.0,
        "seconds": seconds,
    });
    write_atomic(&paths.manifest, manifest(resolved, result).as_bytes())?;
    Ok(RunReport {
        stop,
        iterations: rec.iter,
        final_g: rec.g,
        volfrac: rec.volfrac,
        tensor: rec.tensor,
        seconds,
    })
}
