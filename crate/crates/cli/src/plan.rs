//! Command-line flags, the optional TOML plan file and their merge into an
//! [`ExperimentPlan`].

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use dpp_core::{CellKind, DppParameters, Formulation, Method, SolverConfig};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Convergence,
    StaticScaling,
    Doe,
    /// Render gnuplot scripts from an existing CSV.
    Plot,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Convergence => "convergence",
            Mode::StaticScaling => "static-scaling",
            Mode::Doe => "doe",
            Mode::Plot => "plot",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Parser)]
#[command(name = "dpp", version, about = "Mixed finite-element experiments for the double porosity/permeability model")]
pub struct Cli {
    /// Experiment to run.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// hdiv, cgvms or dgvms.
    #[arg(long)]
    pub formulation: Option<String>,
    /// tri, quad, tet or hex.
    #[arg(long)]
    pub cell: Option<String>,
    /// Mesh divisions per side for a single solve.
    #[arg(long)]
    pub ndiv: Option<usize>,
    /// Comma-separated increasing mesh divisions.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<usize>>,
    /// scale or field.
    #[arg(long)]
    pub method: Option<String>,
    /// Raw solver option tokens, replacing --method.
    #[arg(long, allow_hyphen_values = true)]
    pub petsc_options: Option<String>,
    /// File of solver option tokens, one or more per line.
    #[arg(long)]
    pub solver_config: Option<PathBuf>,
    /// Relative residual tolerance of the outer solver.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Timing repeats per size; each phase keeps its minimum.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Assembly worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parameter preset (paper-2d, paper-3d) or a TOML parameter file.
    #[arg(long)]
    pub params: Option<String>,
    /// TOML plan file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Existing spectrum CSV for plot and doe modes.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// L2 error for a standalone efficacy evaluation.
    #[arg(long, requires = "time")]
    pub l2: Option<f64>,
    /// Wall-clock seconds for a standalone efficacy evaluation.
    #[arg(long, requires = "l2")]
    pub time: Option<f64>,
}

/// Keys accepted in the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PlanFile {
    pub mode: Option<Mode>,
    pub formulation: Option<String>,
    pub cell: Option<String>,
    pub ndiv: Option<usize>,
    pub sweep: Option<Vec<usize>>,
    pub method: Option<String>,
    pub petsc_options: Option<String>,
    pub rtol: Option<f64>,
    pub repeats: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub params: Option<String>,
}

impl PlanFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// The solver as named on the command line.
#[derive(Debug, Clone)]
pub enum SolverChoice {
    Method(Method),
    /// Raw option tokens.
    Tokens,
}

impl SolverChoice {
    /// Label used in output file names.
    pub fn label(&self) -> &str {
        match self {
            SolverChoice::Method(m) => m.name(),
            SolverChoice::Tokens => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub mode: Mode,
    pub formulation: Formulation,
    pub cell: CellKind,
    /// Increasing mesh divisions; a single entry for a solve.
    pub sizes: Vec<usize>,
    pub solver: SolverChoice,
    pub config: SolverConfig,
    pub repeats: usize,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub params: DppParameters,
}

impl ExperimentPlan {
    /// `{mode}_{formulation}_{cell}_{method}`.
    pub fn stem(&self) -> String {
        format!("{}_{}_{}_{}", self.mode, self.formulation, self.cell, self.solver.label())
    }

    pub fn csv_path(&self) -> PathBuf {
        self.out.join(format!("{}.csv", self.stem()))
    }
}

fn default_sizes(mode: Mode, dim: usize) -> Vec<usize> {
    match (mode, dim) {
        (Mode::Solve, 2) => vec![5],
        (Mode::Solve, _) => vec![3],
        (Mode::Convergence, 2) => vec![5, 10, 20, 40],
        (Mode::Convergence, _) => vec![4, 6, 8],
        (_, 2) => vec![8, 16, 32],
        _ => vec![2, 4, 6],
    }
}

fn load_params(spec: Option<&str>, dim: usize) -> Result<DppParameters, CliError> {
    let base = if dim == 2 { DppParameters::paper_2d() } else { DppParameters::paper_3d() };
    match spec {
        None => Ok(base),
        Some(s) if Path::new(s).is_file() => {
            Ok(DppParameters::load(Path::new(s), base).map_err(dpp_core::Error::from)?)
        }
        Some(s) => Ok(DppParameters::preset(s).map_err(dpp_core::Error::from)?),
    }
}

impl ExperimentPlan {
    /// Merge flags over the plan file over built-in defaults and validate.
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(p) => PlanFile::load(p)?,
            None => PlanFile::default(),
        };
        let mode = cli.mode.or(file.mode).ok_or_else(|| CliError::Usage("--mode is required".into()))?;
        let formulation: Formulation = cli
            .formulation
            .as_deref()
            .or(file.formulation.as_deref())
            .unwrap_or("cgvms")
            .parse()
            .map_err(|e| CliError::Usage(format!("{e}")))?;
        let cell: CellKind = cli
            .cell
            .as_deref()
            .or(file.cell.as_deref())
            .unwrap_or("tri")
            .parse()
            .map_err(|e| CliError::Usage(format!("{e}")))?;

        let sizes = match (mode, cli.ndiv, &cli.sweep) {
            (_, Some(_), Some(_)) => return Err(CliError::Usage("--ndiv and --sweep are exclusive".into())),
            (_, Some(n), None) => vec![n],
            (_, None, Some(s)) => s.clone(),
            (_, None, None) => match (file.ndiv, file.sweep) {
                (Some(n), _) => vec![n],
                (None, Some(s)) => s,
                (None, None) => default_sizes(mode, cell.dim()),
            },
        };
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(CliError::Usage("mesh divisions must be positive and nonempty".into()));
        }
        if sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage("sweep must be strictly increasing".into()));
        }
        if mode == Mode::Solve && sizes.len() != 1 {
            return Err(CliError::Usage("solve mode takes a single mesh size".into()));
        }
        if mode == Mode::Convergence && sizes.len() < 3 {
            return Err(CliError::Usage("convergence mode needs at least 3 sizes".into()));
        }

        let tokens = match (&cli.petsc_options, &cli.solver_config) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("--petsc-options and --solver-config are exclusive".into()))
            }
            (Some(t), None) => Some(t.clone()),
            (None, Some(p)) => Some(std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?),
            (None, None) if cli.method.is_none() => file.petsc_options.clone(),
            (None, None) => None,
        };
        let (solver, mut config) = match tokens {
            Some(text) => {
                let config = SolverConfig::from_text(&text).map_err(dpp_core::Error::from)?;
                (SolverChoice::Tokens, config)
            }
            None => {
                let name = cli.method.as_deref().or(file.method.as_deref()).unwrap_or("field");
                let method: Method = name.parse().map_err(dpp_core::Error::from)?;
                (SolverChoice::Method(method), SolverConfig::for_method(method))
            }
        };
        if let Some(rtol) = cli.rtol.or(file.rtol) {
            config.rtol = rtol;
        }
        if !(config.rtol > 0.0 && config.rtol < 1.0) {
            return Err(CliError::Usage(format!("rtol must lie in (0, 1), got {}", config.rtol)));
        }

        let default_repeats = if mode == Mode::Doe { 3 } else { 1 };
        let repeats = cli.repeats.or(file.repeats).unwrap_or(default_repeats);
        if repeats == 0 {
            return Err(CliError::Usage("repeats must be at least 1".into()));
        }
        let workers = cli.workers.or(file.workers);
        if workers == Some(0) {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        let out = cli.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("."));
        let params = load_params(cli.params.as_deref().or(file.params.as_deref()), cell.dim())?;
        Ok(Self { mode, formulation, cell, sizes, solver, config, repeats, workers, out, params })
    }
}
