//! Run settings from flags and an optional JSON config file (flags win).

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use opentm_core::objective::Minor;
use opentm_core::solver::plan_levels;
use opentm_core::{
    feasibility_check, ConductivityTensor, Dims, FilterSpec, InitKind, InitPattern, MaterialParams, Model,
    ObjectiveKind, ObjectiveSpec, RunConfig, SolverConfig, Symmetry,
};

use crate::error::{CliError, CliResult};

pub const DEFAULT_RESO: usize = 32;

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// JSON file with any of the settings below (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cube resolution N (N x N x N elements)
    #[arg(long)]
    pub reso: Option<usize>,
    /// Explicit grid nx,ny,nz (overrides --reso; nz = 1 gives a planar design)
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Target tensor k11,k22,k33,k12,k23,k13
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub target: Option<Vec<f64>>,
    /// Solid and void conductivity k0,kmin
    #[arg(long, value_delimiter = ',')]
    pub kappa: Option<Vec<f64>>,
    /// Initial pattern: iwp, p, d, g, ball or random
    #[arg(long)]
    pub init: Option<String>,
    /// oc (adaptive volume bound), mma (minimum volume) or fixed (fixed volume)
    #[arg(long)]
    pub model: Option<String>,
    /// mse, rel or l1
    #[arg(long)]
    pub objective: Option<String>,
    /// Initial volume fraction (and the bound of the fixed model)
    #[arg(long)]
    pub volfrac: Option<f64>,
    #[arg(long)]
    pub filter_radius: Option<f64>,
    #[arg(long)]
    pub penalty: Option<f64>,
    /// none or central
    #[arg(long)]
    pub sym: Option<String>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative residual of the linear solves
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Objective change regarded as stalled
    #[arg(long)]
    pub conv_threshold: Option<f64>,
    /// Smooth sensitivities before the OC update
    #[arg(long)]
    pub sens_filter: bool,
    /// Also write rho.vti
    #[arg(long)]
    pub vtk: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub reso: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub target: Option<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
    pub init: Option<String>,
    pub model: Option<String>,
    pub objective: Option<String>,
    pub volfrac: Option<f64>,
    pub filter_radius: Option<f64>,
    pub penalty: Option<f64>,
    pub sym: Option<String>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub conv_threshold: Option<f64>,
    pub sens_filter: Option<bool>,
    pub vtk: Option<bool>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings; recorded verbatim in the run manifest.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct Settings {
    pub dims: [usize; 3],
    pub target: [f64; 6],
    pub kappa: [f64; 2],
    pub init: String,
    pub model: String,
    pub objective: String,
    pub volfrac: f64,
    pub filter_radius: f64,
    pub penalty: f64,
    pub sym: String,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub conv_threshold: f64,
    pub sens_filter: bool,
    pub vtk: bool,
}

impl Settings {
    pub fn with_target(dims: [usize; 3], target: [f64; 6]) -> Self {
        Settings {
            dims,
            target,
            kappa: [1.0, 1e-4],
            init: "iwp".into(),
            model: "oc".into(),
            objective: "mse".into(),
            volfrac: 0.5,
            filter_radius: 1.5,
            penalty: 3.0,
            sym: "none".into(),
            max_iter: 500,
            tol: 1e-6,
            seed: 0,
            conv_threshold: 1e-4,
            sens_filter: false,
            vtk: false,
        }
    }
}

/// Settings plus where they came from.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub settings: Settings,
    pub out: Option<PathBuf>,
    /// Fields given both in the config file and on the command line.
    pub overridden: Vec<String>,
    pub config_file: Option<PathBuf>,
}

fn fixed<const N: usize>(name: &str, v: Vec<f64>) -> CliResult<[f64; N]> {
    v.try_into().map_err(|v: Vec<f64>| {
        CliError::Usage(format!("--{name} needs {N} comma-separated values, got {}", v.len()))
    })
}

pub fn resolve(args: &RunArgs) -> CliResult<Resolved> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut overridden = Vec::new();
    macro_rules! pick {
        ($field:ident) => {{
            if args.$field.is_some() && file.$field.is_some() {
                overridden.push(stringify!($field).replace('_', "-"));
            }
            args.$field.clone().or(file.$field.clone())
        }};
    }
    let reso = pick!(reso);
    let dims = pick!(dims);
    let dims = match dims {
        Some(d) => {
            let d: [usize; 3] = d
                .try_into()
                .map_err(|d: Vec<usize>| CliError::Usage(format!("--dims needs 3 values, got {}", d.len())))?;
            d
        }
        None => {
            let n = reso.unwrap_or(DEFAULT_RESO);
            [n, n, n]
        }
    };
    let target = pick!(target).ok_or_else(|| CliError::Usage("--target is required".into()))?;
    let target: [f64; 6] = fixed("target", target)?;
    let mut s = Settings::with_target(dims, target);
    if let Some(k) = pick!(kappa) {
        s.kappa = fixed("kappa", k)?;
    }
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = pick!($field) {
                s.$field = v;
            }
        };
    }
    set!(init);
    set!(model);
    set!(objective);
    set!(volfrac);
    set!(filter_radius);
    set!(penalty);
    set!(sym);
    set!(max_iter);
    set!(tol);
    set!(seed);
    set!(conv_threshold);
    s.sens_filter = args.sens_filter || file.sens_filter.unwrap_or(false);
    s.vtk = args.vtk || file.vtk.unwrap_or(false);
    let out = pick!(out);
    Ok(Resolved {
        settings: s,
        out,
        overridden,
        config_file: args.config.clone(),
    })
}

fn parse<T: std::str::FromStr<Err = opentm_core::Error>>(v: &str) -> CliResult<T> {
    v.parse().map_err(CliError::usage)
}

/// Validated grid: positive sizes that coarsen to a small enough level.
pub fn grid(dims: [usize; 3]) -> CliResult<Dims> {
    let d = Dims::new(dims[0], dims[1], dims[2]).map_err(CliError::usage)?;
    plan_levels(d).map_err(CliError::usage)?;
    Ok(d)
}

pub fn describe_violation(v: &Minor) -> String {
    const NAMES: [&str; 6] = ["k11", "k22", "k33", "k12", "k23", "k13"];
    match v {
        Minor::Leading(order, value) => format!("leading principal minor of order {order} is {value:.3e} (not positive)"),
        Minor::OffDiagonal { slot, value, bound } => {
            format!("|{}| = {value} is not below sqrt of its diagonals ({bound:.4})", NAMES[*slot])
        }
        Minor::Diagonal { slot, value } => format!("{} = {value} is outside (0, k0)", NAMES[*slot]),
    }
}

impl Settings {
    pub fn material(&self) -> CliResult<MaterialParams> {
        MaterialParams::new(self.kappa[0], self.kappa[1], self.penalty).map_err(CliError::usage)
    }

    pub fn to_run_config(&self) -> CliResult<RunConfig> {
        let dims = grid(self.dims)?;
        let material = self.material()?;
        let target = ConductivityTensor(self.target);
        let kind: ObjectiveKind = parse(&self.objective)?;
        let objective = if dims.nz == 1 {
            ObjectiveSpec::planar(kind, target)
        } else {
            ObjectiveSpec::new(kind, target)
        }
        .map_err(CliError::usage)?;
        let feas = feasibility_check(&target, material.kappa0);
        for v in &feas.violations {
            log::warn!("target may be unattainable: {}", describe_violation(v));
        }
        let mut cfg = RunConfig::new(dims, objective);
        cfg.material = material;
        cfg.filter = FilterSpec::cone(self.filter_radius).map_err(CliError::usage)?;
        let init: InitKind = parse(&self.init)?;
        cfg.init = InitPattern {
            kind: init,
            volume_fraction: self.volfrac,
            seed: self.seed,
        };
        cfg.model = parse::<Model>(&self.model)?;
        cfg.symmetry = parse::<Symmetry>(&self.sym)?;
        cfg.max_iter = self.max_iter;
        cfg.volfrac = self.volfrac;
        cfg.conv_threshold = self.conv_threshold;
        cfg.smooth_sensitivity = self.sens_filter;
        cfg.solver = SolverConfig {
            tol: self.tol,
            ..SolverConfig::default()
        };
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}
