//! `dpp`: single solves, mesh-convergence and static-scaling sweeps and
//! efficacy reports, written as spectrum CSV files with gnuplot scripts.

mod plan;
mod plots;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use dpp_core::spectrum::{convergence_slope, doe, static_scaling_run, RunOptions, SpectrumRecord, FIELD_NAMES};
use thiserror::Error;

use plan::{Cli, ExperimentPlan, Mode};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Csv(String),
    #[error(transparent)]
    Core(#[from] dpp_core::Error),
    #[error("size {n_div} failed after {done} completed sizes ({csv} holds them): {source}")]
    Partial { n_div: usize, done: usize, csv: String, source: dpp_core::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// Short machine-readable category.
    fn kind(&self) -> &'static str {
        use dpp_core::Error as E;
        let core = match self {
            CliError::Usage(_) => return "usage",
            CliError::Config(_) => return "config",
            CliError::Io { .. } => return "io",
            CliError::Csv(_) => return "csv",
            CliError::Core(e) | CliError::Partial { source: e, .. } => e,
        };
        match core {
            E::NotConverged(_) => "not-converged",
            E::Config(_) => "solver-config",
            E::Problem(_) => "parameters",
            E::Mesh(_) | E::Element(_) => "mesh",
            E::Spectrum(_) => "metrics",
            E::Io(_) => "io",
            E::Linalg(_) | E::Assembly(_) => "solve",
        }
    }
}

fn run_options(plan: &ExperimentPlan) -> RunOptions {
    RunOptions { repeats: plan.repeats, workers: plan.workers, ..RunOptions::default() }
}

fn print_record(r: &SpectrumRecord) {
    for (k, v) in SpectrumRecord::CSV_HEADER.split(',').zip(r.csv_row().split(',')) {
        println!("{k}={v}");
    }
}

fn print_doe(r: &SpectrumRecord) {
    let values: Vec<String> = FIELD_NAMES.iter().zip(r.doe()).map(|(f, v)| format!("doe_{f}={v}")).collect();
    println!("ndiv={} total_s={:e} {}", r.n_div, r.total_s, values.join(" "));
}

/// Measure every size of the plan and write the CSV, keeping completed sizes
/// if one fails.
fn sweep(plan: &ExperimentPlan) -> Result<Vec<SpectrumRecord>, CliError> {
    std::fs::create_dir_all(&plan.out).map_err(|e| CliError::io(&plan.out, e))?;
    let run =
        static_scaling_run(plan.formulation, plan.cell, &plan.sizes, &plan.params, &plan.config, &run_options(plan))
            .map_err(dpp_core::Error::from)?;
    let csv = plan.csv_path();
    plots::write_records(&csv, &run.records)?;
    match run.failure {
        None => Ok(run.records),
        Some((n_div, source)) => {
            Err(CliError::Partial { n_div, done: run.records.len(), csv: csv.display().to_string(), source })
        }
    }
}

fn emit(csv: &Path) -> Result<(), CliError> {
    for p in plots::emit_plots(csv)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.mode == Some(Mode::Doe) && cli.l2.is_some() {
        let (l2, time) = (cli.l2.unwrap_or_default(), cli.time.unwrap_or_default());
        println!("doe={}", doe(l2, time).map_err(dpp_core::Error::from)?);
        return Ok(());
    }
    if cli.mode == Some(Mode::Plot) {
        let input = cli.input.as_deref().ok_or_else(|| CliError::Usage("plot mode needs --input".into()))?;
        return emit(input);
    }
    if cli.mode == Some(Mode::Doe) {
        if let Some(input) = &cli.input {
            for r in plots::read_records(input)? {
                print_doe(&r);
            }
            return Ok(());
        }
    }

    let plan = ExperimentPlan::from_cli(cli)?;
    let records = sweep(&plan)?;
    let csv = plan.csv_path();
    match plan.mode {
        Mode::Solve => print_record(&records[0]),
        Mode::Convergence => {
            let slopes = convergence_slope(&records).map_err(dpp_core::Error::from)?;
            let mut summary =
                String::from("# |d DoA / d DoS|, least squares; DoS = -log10(DoF) so raw slopes are negative\n");
            for (f, s) in FIELD_NAMES.iter().zip(slopes) {
                summary.push_str(&format!("slope_{f}={s:.6}\n"));
            }
            let path = plan.out.join(format!("{}_summary.txt", plan.stem()));
            std::fs::write(&path, &summary).map_err(|e| CliError::io(&path, e))?;
            print!("{summary}");
            emit(&csv)?;
        }
        Mode::StaticScaling => {
            for r in &records {
                println!(
                    "ndiv={} dof={} ksp={} total_s={:e} dof_per_s={:e}",
                    r.n_div,
                    r.dof,
                    r.ksp,
                    r.total_s,
                    r.rates().total
                );
            }
            emit(&csv)?;
        }
        Mode::Doe => {
            for r in &records {
                print_doe(r);
            }
            emit(&csv)?;
        }
        Mode::Plot => unreachable!("handled above"),
    }
    println!("wrote {}", csv.display());
    Ok(())
}

fn fail(kind: &str, msg: &str) -> ExitCode {
    let msg = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error: kind={kind} msg={msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", &e.to_string().replace("error: ", "")),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
