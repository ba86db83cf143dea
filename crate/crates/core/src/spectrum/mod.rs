//! Time-Accuracy-Size metrics: L2 errors, digits of accuracy, size and
//! efficacy, parallel efficiency and static-scaling records.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::assembly::{assemble_with, AssemblyOptions, DiscreteSolution, Formulation};
use crate::blocksolve::{solve, SolverConfig};
use crate::elements::quadrature_rule;
use crate::geometry::Point;
use crate::mesh::{generate_unit_mesh, CellKind, Mesh};
use crate::problem::{boundary_data, DppParameters, FieldValues, ManufacturedSolution};
use crate::Result;

/// Quadrature degree used for error integrals.
pub const L2_QUAD_DEGREE: usize = 4;

/// Field order used by every per-field array in this module.
pub const FIELD_NAMES: [&str; 4] = ["u1", "p1", "u2", "p2"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("{quantity} must be positive, got {value}")]
    NonPositive { quantity: &'static str, value: f64 },
    #[error("a slope fit needs at least 3 records, got {0}")]
    TooFewRecords(usize),
    #[error("{0} must be strictly increasing")]
    NotIncreasing(&'static str),
    #[error("records mix {0}")]
    Mixed(&'static str),
    #[error("{0}")]
    Mismatch(String),
    #[error("bad CSV record: {0}")]
    Csv(String),
}

fn positive(quantity: &'static str, value: f64) -> std::result::Result<f64, SpectrumError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(SpectrumError::NonPositive { quantity, value })
    }
}

/// Digits of accuracy `-log10(l2)`.
pub fn doa(l2: f64) -> std::result::Result<f64, SpectrumError> {
    Ok(-positive("L2 error", l2)?.log10())
}

/// Digits of size `-log10(dof)`.
pub fn dos(dof: usize) -> std::result::Result<f64, SpectrumError> {
    Ok(-positive("DoF", dof as f64)?.log10())
}

/// Digits of efficacy `-log10(l2 * time)`.
pub fn doe(l2: f64, time: f64) -> std::result::Result<f64, SpectrumError> {
    Ok(-(positive("L2 error", l2)? * positive("time", time)?).log10())
}

/// `t1 / (tp * workers)` in percent.
pub fn parallel_efficiency(t1: f64, tp: f64, workers: usize) -> f64 {
    t1 / (tp * workers as f64) * 100.0
}

/// Wall-clock times at increasing worker counts, starting from one worker.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencySeries {
    pub workers: Vec<usize>,
    pub times: Vec<f64>,
    /// Percentages, relative to the single-worker time.
    pub efficiency: Vec<f64>,
}

impl EfficiencySeries {
    pub fn from_times(workers: Vec<usize>, times: Vec<f64>) -> std::result::Result<Self, SpectrumError> {
        if workers.len() != times.len() || workers.is_empty() {
            return Err(SpectrumError::Mismatch(format!("{} worker counts for {} times", workers.len(), times.len())));
        }
        if workers[0] != 1 {
            return Err(SpectrumError::Mismatch("the first entry must be the single-worker run".into()));
        }
        if workers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpectrumError::NotIncreasing("worker counts"));
        }
        for &t in &times {
            positive("time", t)?;
        }
        let efficiency = workers.iter().zip(&times).map(|(&w, &t)| parallel_efficiency(times[0], t, w)).collect();
        Ok(Self { workers, times, efficiency })
    }
}

fn field_components(v: &FieldValues) -> [[f64; 3]; 4] {
    [v.u1, [v.p1, 0.0, 0.0], v.u2, [v.p2, 0.0, 0.0]]
}

/// Integrate `f(cell, xi, x)` over the mesh at quadrature `degree`.
/// Cell contributions are summed in cell order.
fn integrate<const N: usize, F>(mesh: &Mesh, degree: usize, f: F) -> Result<[f64; N]>
where
    F: Fn(usize, &Point, &Point) -> Result<[f64; N]> + Sync,
{
    let rule = quadrature_rule(mesh.cell_kind(), degree)?;
    let per_cell: Vec<[f64; N]> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.cell_geometry(c)?;
            let mut acc = [0.0; N];
            for (xi, w) in rule.iter() {
                let jw = w * geom.det_jacobian(xi).abs();
                let vals = f(c, xi, &geom.map(xi))?;
                for (a, v) in acc.iter_mut().zip(vals) {
                    *a += jw * v;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = [0.0; N];
    for cell in per_cell {
        for (t, v) in total.iter_mut().zip(cell) {
            *t += v;
        }
    }
    Ok(total)
}

/// `‖discrete - exact‖_L2` for a field given pointwise. Scalars use the first
/// component only.
pub fn l2_error<D, E>(mesh: &Mesh, degree: usize, discrete: D, exact: E) -> Result<f64>
where
    D: Fn(usize, &Point) -> Result<[f64; 3]> + Sync,
    E: Fn(&Point) -> [f64; 3] + Sync,
{
    let [sq] = integrate(mesh, degree, |c, xi, x| {
        let (a, b) = (discrete(c, xi)?, exact(x));
        Ok([a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum()])
    })?;
    Ok(sq.sqrt())
}

/// L2 errors of all four fields of `solution` against `mms`, ordered as
/// [`FIELD_NAMES`].
pub fn field_l2_errors(
    solution: &DiscreteSolution,
    mesh: &Mesh,
    mms: &ManufacturedSolution,
    params: &DppParameters,
    degree: usize,
) -> Result<[f64; 4]> {
    let sq = integrate(mesh, degree, |c, xi, x| {
        let h = field_components(&solution.eval(mesh, c, xi)?);
        let e = field_components(&mms.eval(x, params));
        let mut out = [0.0; 4];
        for (o, (a, b)) in out.iter_mut().zip(h.iter().zip(&e)) {
            *o = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
        }
        Ok(out)
    })?;
    Ok(sq.map(f64::sqrt))
}

/// Throughput of each phase in DoF per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRates {
    pub assembly: f64,
    pub solve: f64,
    pub total: f64,
}

/// One point of a convergence or static-scaling study. Derived metrics are
/// computed from the stored fields on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    pub formulation: Formulation,
    pub cell_kind: CellKind,
    pub n_div: usize,
    pub dof: usize,
    pub ksp: usize,
    pub assembly_s: f64,
    pub solve_s: f64,
    pub total_s: f64,
    /// Ordered as [`FIELD_NAMES`].
    pub l2: [f64; 4],
}

impl SpectrumRecord {
    pub const CSV_HEADER: &'static str = "formulation,cell,ndiv,dof,ksp,assembly_s,solve_s,total_s,\
l2_u1,l2_p1,l2_u2,l2_p2,doa_u1,doa_p1,doa_u2,doa_p2,dos,doe_u1,doe_p1,doe_u2,doe_p2,dof_per_s_total";

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        formulation: Formulation,
        cell_kind: CellKind,
        n_div: usize,
        dof: usize,
        ksp: usize,
        assembly_s: f64,
        solve_s: f64,
        l2: [f64; 4],
    ) -> std::result::Result<Self, SpectrumError> {
        let record =
            Self { formulation, cell_kind, n_div, dof, ksp, assembly_s, solve_s, total_s: assembly_s + solve_s, l2 };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> std::result::Result<(), SpectrumError> {
        positive("DoF", self.dof as f64)?;
        if !(self.assembly_s >= 0.0) {
            return Err(SpectrumError::NonPositive { quantity: "assembly time", value: self.assembly_s });
        }
        positive("solve time", self.solve_s)?;
        positive("total time", self.total_s)?;
        for l in self.l2 {
            positive("L2 error", l)?;
        }
        Ok(())
    }

    pub fn doa(&self) -> [f64; 4] {
        self.l2.map(|l| -l.log10())
    }

    pub fn dos(&self) -> f64 {
        -(self.dof as f64).log10()
    }

    /// Efficacy against the total time.
    pub fn doe(&self) -> [f64; 4] {
        self.l2.map(|l| -(l * self.total_s).log10())
    }

    pub fn rates(&self) -> PhaseRates {
        let n = self.dof as f64;
        PhaseRates { assembly: n / self.assembly_s, solve: n / self.solve_s, total: n / self.total_s }
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.formulation.to_string(),
            self.cell_kind.to_string(),
            self.n_div.to_string(),
            self.dof.to_string(),
            self.ksp.to_string(),
            format!("{:e}", self.assembly_s),
            format!("{:e}", self.solve_s),
            format!("{:e}", self.total_s),
        ];
        let floats = self.l2.into_iter().chain(self.doa()).chain([self.dos()]).chain(self.doe());
        cols.extend(floats.map(|v| format!("{v:e}")));
        cols.push(format!("{:e}", self.rates().total));
        cols.join(",")
    }

    /// Parse one CSV data row, checking that the derived columns agree with
    /// the stored ones.
    pub fn from_csv_fields<S: AsRef<str>>(fields: &[S]) -> std::result::Result<Self, SpectrumError> {
        let n_cols = Self::CSV_HEADER.split(',').count();
        if fields.len() != n_cols {
            return Err(SpectrumError::Csv(format!("expected {n_cols} columns, found {}", fields.len())));
        }
        let col = |i: usize| fields[i].as_ref().trim();
        let float = |i: usize| -> std::result::Result<f64, SpectrumError> {
            col(i).parse().map_err(|_| SpectrumError::Csv(format!("column {i}: '{}' is not a number", col(i))))
        };
        let int = |i: usize| -> std::result::Result<usize, SpectrumError> {
            col(i).parse().map_err(|_| SpectrumError::Csv(format!("column {i}: '{}' is not an integer", col(i))))
        };
        let formulation = col(0).parse().map_err(|e| SpectrumError::Csv(format!("{e}")))?;
        let cell_kind = col(1).parse().map_err(|e| SpectrumError::Csv(format!("{e}")))?;
        let record = Self {
            formulation,
            cell_kind,
            n_div: int(2)?,
            dof: int(3)?,
            ksp: int(4)?,
            assembly_s: float(5)?,
            solve_s: float(6)?,
            total_s: float(7)?,
            l2: [float(8)?, float(9)?, float(10)?, float(11)?],
        };
        record.validate()?;
        let derived = record.doa().into_iter().chain([record.dos()]).chain(record.doe()).chain([record.rates().total]);
        for (i, want) in (12..n_cols).zip(derived) {
            let got = float(i)?;
            if (got - want).abs() > 1e-12 * want.abs().max(1.0) {
                return Err(SpectrumError::Csv(format!("column {i} is {got}, recomputed {want}")));
            }
        }
        Ok(record)
    }
}

impl fmt::Display for SpectrumRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.csv_row())
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> std::result::Result<f64, SpectrumError> {
    if x.len() != y.len() {
        return Err(SpectrumError::Mismatch(format!("{} abscissae for {} ordinates", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(SpectrumError::TooFewRecords(x.len()));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    positive("abscissa spread", sxx)?;
    Ok(sxy / sxx)
}

/// Magnitude of the DoA-versus-DoS slope per field. Raw slopes are negative
/// because DoS decreases as the mesh is refined.
pub fn convergence_slope(records: &[SpectrumRecord]) -> std::result::Result<[f64; 4], SpectrumError> {
    if records.len() < 3 {
        return Err(SpectrumError::TooFewRecords(records.len()));
    }
    if records.iter().any(|r| r.formulation != records[0].formulation) {
        return Err(SpectrumError::Mixed("formulations"));
    }
    if records.iter().any(|r| r.cell_kind != records[0].cell_kind) {
        return Err(SpectrumError::Mixed("cell kinds"));
    }
    if records.windows(2).any(|w| w[1].dof <= w[0].dof) {
        return Err(SpectrumError::NotIncreasing("DoF"));
    }
    let x: Vec<f64> = records.iter().map(SpectrumRecord::dos).collect();
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        let y: Vec<f64> = records.iter().map(|r| r.doa()[i]).collect();
        *o = fit_slope(&x, &y)?.abs();
    }
    Ok(out)
}

/// Settings shared by every measured case.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Each phase reports the minimum over this many runs.
    pub repeats: usize,
    /// Assembly worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub quad_degree: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { repeats: 1, workers: None, quad_degree: L2_QUAD_DEGREE }
    }
}

/// Assemble and solve the benchmark problem on the unit mesh with `n_div`
/// divisions and measure it.
pub fn measure_case(
    formulation: Formulation,
    cell_kind: CellKind,
    n_div: usize,
    params: &DppParameters,
    config: &SolverConfig,
    opts: &RunOptions,
) -> Result<SpectrumRecord> {
    let dim = cell_kind.dim();
    let mesh = generate_unit_mesh(dim, cell_kind, n_div)?;
    let mms = ManufacturedSolution::for_dim(dim);
    let bcs = boundary_data(&mms, &mesh)?;
    let asm = AssemblyOptions { workers: opts.workers, ..AssemblyOptions::default() };
    let (mut assembly_s, mut solve_s) = (f64::INFINITY, f64::INFINITY);
    let mut last = None;
    for _ in 0..opts.repeats.max(1) {
        let start = Instant::now();
        let system = assemble_with(formulation, &mesh, params, &bcs, &asm)?;
        assembly_s = assembly_s.min(start.elapsed().as_secs_f64());
        let report = solve(&system, config)?;
        solve_s = solve_s.min(report.timings.solve);
        last = Some(report);
    }
    let report = last.expect("at least one repeat");
    let l2 = field_l2_errors(&report.solution, &mesh, &mms, params, opts.quad_degree)?;
    Ok(SpectrumRecord::new(
        formulation,
        cell_kind,
        n_div,
        report.n_dofs,
        report.stats.iterations,
        assembly_s,
        solve_s,
        l2,
    )?)
}

/// Records of a size sweep at fixed concurrency. A failed size stops the
/// sweep; the records measured before it are kept.
#[derive(Debug)]
pub struct ScalingRun {
    pub records: Vec<SpectrumRecord>,
    /// The size that failed and why.
    pub failure: Option<(usize, crate::Error)>,
}

impl ScalingRun {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Measure each size in `n_divs` in turn.
pub fn static_scaling_run(
    formulation: Formulation,
    cell_kind: CellKind,
    n_divs: &[usize],
    params: &DppParameters,
    config: &SolverConfig,
    opts: &RunOptions,
) -> std::result::Result<ScalingRun, SpectrumError> {
    if n_divs.is_empty() {
        return Err(SpectrumError::TooFewRecords(0));
    }
    if n_divs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectrumError::NotIncreasing("mesh divisions"));
    }
    let mut records = Vec::with_capacity(n_divs.len());
    for &n in n_divs {
        match measure_case(formulation, cell_kind, n, params, config, opts) {
            Ok(r) => records.push(r),
            Err(e) => return Ok(ScalingRun { records, failure: Some((n, e)) }),
        }
    }
    Ok(ScalingRun { records, failure: None })
}
