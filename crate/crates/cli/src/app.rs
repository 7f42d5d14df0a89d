//! Command-line definition and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use opentm_core::{DensityField, Filter, FilterSpec, Homogenizer, SolverConfig};

use crate::config::{self, RunArgs, Settings};
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_USAGE};
use crate::gallery::{self, GalleryOptions};
use crate::io::{format_kappa, read_otm};
use crate::run;

#[derive(Parser, Debug)]
#[command(name = "opentm", version, about = "Inverse homogenization of periodic thermal microstructures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimize a density field towards a target conductivity tensor
    Run(RunArgs),
    /// Run every feasible off-diagonal combination around a diagonal target
    Gallery(GalleryArgs),
    /// Evaluate the effective tensor of a stored density field
    Homogenize(HomogenizeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GalleryArgs {
    /// Diagonal k11,k22,k33
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.2,0.1")]
    pub diag: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Cube resolution of each case
    #[arg(long, default_value_t = 16)]
    pub reso: usize,
    /// Worker threads (defaults to the available cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Only run the first N feasible cases
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,0.0001")]
    pub kappa: Vec<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub penalty: f64,
    #[arg(long, default_value_t = 1.5)]
    pub filter_radius: f64,
    /// Write cases.csv and stop
    #[arg(long)]
    pub enumerate_only: bool,
}

#[derive(Args, Debug, Clone)]
pub struct HomogenizeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,0.0001")]
    pub kappa: Vec<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub penalty: f64,
    /// Filter the stored densities first (off by default: the field is used as is)
    #[arg(long)]
    pub filter_radius: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

fn pair(name: &str, v: &[f64]) -> CliResult<[f64; 2]> {
    v.try_into()
        .map_err(|_| CliError::Usage(format!("--{name} needs 2 comma-separated values, got {}", v.len())))
}

fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let resolved = config::resolve(args)?;
    let out = resolved
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("--out is required".into()))?;
    let r = run::execute(&resolved, &out)?;
    println!(
        "{}: {} iterations, g {:.4e}, volume fraction {:.4}, {:.1}s",
        out.display(),
        r.iterations,
        r.final_g,
        r.volfrac,
        r.seconds
    );
    print!("{}", format_kappa(&r.tensor));
    Ok(())
}

fn cmd_gallery(args: &GalleryArgs) -> CliResult<()> {
    let diag: [f64; 3] = args
        .diag
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Usage(format!("--diag needs 3 values, got {}", args.diag.len())))?;
    let kappa = pair("kappa", &args.kappa)?;
    let mut base = Settings::with_target([args.reso; 3], [diag[0], diag[1], diag[2], 0.0, 0.0, 0.0]);
    base.kappa = kappa;
    base.penalty = args.penalty;
    base.filter_radius = args.filter_radius;
    let opts = GalleryOptions {
        diag,
        step: args.step,
        out: args.out.clone(),
        reso: args.reso,
        workers: args
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        limit: args.limit,
        max_iter: args.max_iter,
        enumerate_only: args.enumerate_only,
    };
    let outcomes = gallery::run_gallery(&opts, &base)?;
    let all = gallery::enumerate(diag, args.step);
    let feasible = all.iter().filter(|c| c.feasible()).count();
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    println!(
        "{} raw combinations, {} feasible, {} run, {} failed",
        all.len(),
        feasible,
        outcomes.len(),
        failed
    );
    Ok(())
}

fn cmd_homogenize(args: &HomogenizeArgs) -> CliResult<()> {
    let [k0, kmin] = pair("kappa", &args.kappa)?;
    let material = opentm_core::MaterialParams::new(k0, kmin, args.penalty).map_err(CliError::usage)?;
    let (dims, values) = read_otm(&args.input)?;
    config::grid([dims.nx, dims.ny, dims.nz])?;
    let rho: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    let field = DensityField::from_values(dims, rho).map_err(CliError::usage)?;
    let rho = match args.filter_radius {
        Some(r) => {
            let spec = FilterSpec::cone(r).map_err(CliError::usage)?;
            Filter::new(dims, &spec).forward(&field.rho).map_err(CliError::usage)?
        }
        None => field.rho,
    };
    let solver = SolverConfig {
        tol: args.tol,
        ..SolverConfig::default()
    };
    let mut h = Homogenizer::new(dims, material, solver).map_err(CliError::usage)?;
    let res = h.evaluate(&rho).map_err(CliError::runtime)?;
    print!("{}", format_kappa(&res.tensor));
    Ok(())
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Gallery(a) => cmd_gallery(a),
        Command::Homogenize(a) => cmd_homogenize(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
