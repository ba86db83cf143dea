//! Nested fieldsplit preconditioners over the four-field system and the
//! outer GMRES driver.

mod config;

use std::fmt::Write as _;
use std::ops::Range;
use std::time::Instant;

pub use config::{parse_options, ConfigError, Method, PcSpec, SolverConfig, SplitSpec, SplitType};

use crate::assembly::{monolithic_view, BlockSystem, DiscreteSolution, Field, Formulation};
use crate::linalg::{
    amg_setup, diag_lump, gmres, ilu0, schur_selfp, AmgHierarchy, AmgOptions, CsrMatrix, GmresOptions, Ilu0,
    KrylovStats, Preconditioner,
};
use crate::{Error, Result};

/// A built preconditioner. Index lists are positions in the vector the node
/// acts on.
#[derive(Debug, Clone)]
pub enum PcNode {
    Identity(usize),
    Ilu(Ilu0),
    Amg(AmgHierarchy),
    Additive {
        n: usize,
        groups: Vec<Vec<usize>>,
        children: Vec<PcNode>,
    },
    SchurFull {
        n: usize,
        first: Vec<usize>,
        second: Vec<usize>,
        a_inv: Box<PcNode>,
        s_inv: Box<PcNode>,
        b: CsrMatrix,
        c: CsrMatrix,
    },
}

fn field_ranges(sizes: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    sizes
        .iter()
        .map(|&s| {
            let r = start..start + s;
            start += s;
            r
        })
        .collect()
}

impl PcNode {
    /// Build `spec` for `a`, whose unknowns are the consecutive fields of
    /// sizes `field_sizes`.
    pub fn build(spec: &PcSpec, a: &CsrMatrix, field_sizes: &[usize]) -> Result<Self> {
        let n = a.n_rows();
        Ok(match spec {
            PcSpec::None => PcNode::Identity(n),
            PcSpec::Ilu0 => PcNode::Ilu(ilu0(a)?),
            PcSpec::Amg => PcNode::Amg(amg_setup(a, &AmgOptions::default())?),
            PcSpec::FieldSplit(split) => {
                let ranges = field_ranges(field_sizes);
                if ranges.last().map_or(0, |r| r.end) != n || split.groups.iter().flatten().any(|&f| f >= ranges.len())
                {
                    return Err(Error::Assembly(format!(
                        "split over {} fields does not match an operator with {} field blocks",
                        split.groups.iter().flatten().count(),
                        field_sizes.len()
                    )));
                }
                let index = |g: &[usize]| -> Vec<usize> { g.iter().flat_map(|&f| ranges[f].clone()).collect() };
                let sizes = |g: &[usize]| -> Vec<usize> { g.iter().map(|&f| field_sizes[f]).collect() };
                let groups: Vec<Vec<usize>> = split.groups.iter().map(|g| index(g)).collect();
                if let Some(i) = groups.iter().position(Vec::is_empty) {
                    return Err(Error::Assembly(format!("field group {i} is empty")));
                }
                match split.split_type {
                    SplitType::Additive => {
                        let children = split
                            .groups
                            .iter()
                            .zip(&groups)
                            .zip(&split.children)
                            .map(|((g, idx), child)| PcNode::build(child, &a.submatrix(idx, idx)?, &sizes(g)))
                            .collect::<Result<_>>()?;
                        PcNode::Additive { n, groups, children }
                    }
                    SplitType::SchurFull => {
                        let (first, second) = (groups[0].clone(), groups[1].clone());
                        let a00 = a.submatrix(&first, &first)?;
                        let b = a.submatrix(&first, &second)?;
                        let c = a.submatrix(&second, &first)?;
                        let d = a.submatrix(&second, &second)?;
                        let sp = schur_selfp(&d, &c, &diag_lump(&a00)?, &b)?;
                        let a_inv = PcNode::build(&split.children[0], &a00, &sizes(&split.groups[0]))?;
                        let s_inv = PcNode::build(&split.children[1], &sp, &sizes(&split.groups[1]))?;
                        PcNode::SchurFull { n, first, second, a_inv: Box::new(a_inv), s_inv: Box::new(s_inv), b, c }
                    }
                }
            }
        })
    }
}

fn gather(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

fn scatter(src: &[f64], idx: &[usize], dst: &mut [f64]) {
    for (&i, &v) in idx.iter().zip(src) {
        dst[i] = v;
    }
}

impl Preconditioner for PcNode {
    fn dim(&self) -> usize {
        match self {
            PcNode::Identity(n) => *n,
            PcNode::Ilu(f) => f.dim(),
            PcNode::Amg(h) => h.dim(),
            PcNode::Additive { n, .. } | PcNode::SchurFull { n, .. } => *n,
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            PcNode::Identity(_) => z.copy_from_slice(r),
            PcNode::Ilu(f) => f.apply(r, z),
            PcNode::Amg(h) => h.apply(r, z),
            PcNode::Additive { groups, children, .. } => {
                for (idx, child) in groups.iter().zip(children) {
                    let mut zg = vec![0.0; idx.len()];
                    child.apply(&gather(r, idx), &mut zg);
                    scatter(&zg, idx, z);
                }
            }
            PcNode::SchurFull { first, second, a_inv, s_inv, b, c, .. } => {
                let r0 = gather(r, first);
                let mut r1 = gather(r, second);
                let mut y0 = vec![0.0; first.len()];
                a_inv.apply(&r0, &mut y0);
                let cy = c.spmv(&y0).expect("block sizes fixed at build time");
                r1.iter_mut().zip(&cy).for_each(|(a, b)| *a -= b);
                let mut z1 = vec![0.0; second.len()];
                s_inv.apply(&r1, &mut z1);
                let bz = b.spmv(&z1).expect("block sizes fixed at build time");
                let t0: Vec<f64> = r0.iter().zip(&bz).map(|(a, b)| a - b).collect();
                let mut z0 = vec![0.0; first.len()];
                a_inv.apply(&t0, &mut z0);
                scatter(&z0, first, z);
                scatter(&z1, second, z);
            }
        }
    }
}

fn field_sizes(system: &BlockSystem) -> Vec<usize> {
    Field::ALL.iter().map(|&f| system.field_size(f)).collect()
}

/// Build the preconditioner `spec` for the monolithic matrix of `system`.
pub fn build_preconditioner(system: &BlockSystem, spec: &PcSpec) -> Result<PcNode> {
    let (k, _) = monolithic_view(system)?;
    PcNode::build(spec, &k, &field_sizes(system))
}

/// Per-network Schur factorizations, cross-network blocks left to the outer
/// Krylov method.
pub fn build_scale_split(system: &BlockSystem) -> Result<PcNode> {
    build_preconditioner(system, &SolverConfig::for_method(Method::Scale).pc)
}

/// One Schur factorization over velocities and pressures of both networks.
pub fn build_field_split(system: &BlockSystem) -> Result<PcNode> {
    build_preconditioner(system, &SolverConfig::for_method(Method::Field).pc)
}

/// Wall-clock seconds of each phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub assembly: f64,
    /// Preconditioner construction.
    pub setup: f64,
    /// Setup plus Krylov iterations.
    pub solve: f64,
    pub total: f64,
}

/// Outcome of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub formulation: Formulation,
    pub n_dofs: usize,
    pub solution: DiscreteSolution,
    /// Solution in the global ordering.
    pub x: Vec<f64>,
    pub stats: KrylovStats,
    pub timings: PhaseTimings,
}

impl SolveReport {
    pub const CSV_HEADER: &'static str =
        "formulation,dofs,ksp,converged,rel_residual,assembly_s,setup_s,solve_s,total_s";

    pub fn csv_row(&self) -> String {
        let t = &self.timings;
        format!(
            "{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            self.formulation,
            self.n_dofs,
            self.stats.iterations,
            self.stats.converged,
            self.stats.rel_residual,
            t.assembly,
            t.setup,
            t.solve,
            t.total
        )
    }

    /// `key=value` lines.
    pub fn key_values(&self) -> String {
        let t = &self.timings;
        let mut s = String::new();
        let _ = writeln!(s, "formulation={}", self.formulation);
        let _ = writeln!(s, "dofs={}", self.n_dofs);
        let _ = writeln!(s, "ksp={}", self.stats.iterations);
        let _ = writeln!(s, "converged={}", self.stats.converged);
        let _ = writeln!(s, "termination={:?}", self.stats.termination);
        let _ = writeln!(s, "rel_residual={:.6e}", self.stats.rel_residual);
        let _ = writeln!(s, "assembly_s={:.6e}", t.assembly);
        let _ = writeln!(s, "setup_s={:.6e}", t.setup);
        let _ = writeln!(s, "solve_s={:.6e}", t.solve);
        let _ = writeln!(s, "total_s={:.6e}", t.total);
        s
    }
}

/// Solve the system with outer GMRES preconditioned per `config`.
/// Non-convergence is returned as [`Error::NotConverged`] carrying the report.
pub fn solve(system: &BlockSystem, config: &SolverConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let (k, f) = monolithic_view(system)?;
    let pc = PcNode::build(&config.pc, &k, &field_sizes(system))?;
    let setup = start.elapsed().as_secs_f64();
    let opts = GmresOptions { rtol: config.rtol, max_iter: config.max_iter, restart: config.restart };
    let (x, stats) = gmres(&k, &pc, &f, None, &opts)?;
    let solve_time = start.elapsed().as_secs_f64();
    let assembly = system.stats.wall_time;
    let report = SolveReport {
        formulation: system.formulation,
        n_dofs: system.n_dofs(),
        solution: DiscreteSolution::from_monolithic(system, &x)?,
        x,
        stats,
        timings: PhaseTimings { assembly, setup, solve: solve_time, total: assembly + solve_time },
    };
    if report.stats.converged {
        Ok(report)
    } else {
        Err(Error::NotConverged(Box::new(report)))
    }
}

#[cfg(test)]
mod tests;
