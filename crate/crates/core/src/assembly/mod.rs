//! Block assembly of the four-field system for the three formulations.
//!
//! Every formulation produces a [`BlockSystem`]: ten sparse blocks and four
//! right-hand-side segments, with the unknowns ordered `(u1, p1, u2, p2)`.

mod hdiv;
mod local;
mod vms;

use std::fmt;
use std::io::BufWriter;
use std::ops::Range;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::elements::quadrature_rule;
pub use crate::elements::Formulation;
use crate::geometry::Point;
use crate::linalg::{mmio, CsrMatrix};
use crate::mesh::{CellKind, Mesh};
use crate::problem::{BoundarySpec, DppParameters, FieldValues, ProblemError};
use crate::{Error, Result};

pub use vms::{dg_jump_energy, dg_jump_penalty};

/// One of the four unknown fields, in global order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    U1,
    P1,
    U2,
    P2,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::U1, Field::P1, Field::U2, Field::P2];

    /// Position in the global ordering.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Pore network (0 = macro, 1 = micro).
    pub fn network(self) -> usize {
        self.index() / 2
    }

    pub fn is_velocity(self) -> bool {
        matches!(self, Field::U1 | Field::U2)
    }

    pub fn velocity(network: usize) -> Self {
        if network == 0 {
            Field::U1
        } else {
            Field::U2
        }
    }

    pub fn pressure(network: usize) -> Self {
        if network == 0 {
            Field::P1
        } else {
            Field::P2
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::U1 => "u1",
            Field::P1 => "p1",
            Field::U2 => "u2",
            Field::P2 => "p2",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Knobs of the assembly loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Quadrature degree of the bilinear forms.
    pub quad_degree: usize,
    /// Quadrature degree of data-dependent loads and boundary functionals.
    pub load_degree: usize,
    /// Include facet terms and boundary conditions. Disabling them leaves
    /// only cell integrals.
    pub boundary_terms: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { workers: None, quad_degree: 2, load_degree: 4, boundary_terms: true }
    }
}

/// Nonzeros of the ten blocks and the assembly wall time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssemblyStats {
    pub wall_time: f64,
    /// In the order `uu1, up1, pu1, pp1, uu2, up2, pu2, pp2, pp12, pp21`.
    pub nnz: [usize; 10],
}

impl AssemblyStats {
    pub fn total_nnz(&self) -> usize {
        self.nnz.iter().sum()
    }
}

/// The assembled four-field linear system.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub formulation: Formulation,
    pub cell_kind: CellKind,
    pub dim: usize,
    /// `K^n_uu` for each network.
    pub uu: [CsrMatrix; 2],
    pub up: [CsrMatrix; 2],
    pub pu: [CsrMatrix; 2],
    pub pp: [CsrMatrix; 2],
    /// Cross-network coupling `K^12_pp` (rows p1, columns p2).
    pub pp12: CsrMatrix,
    /// Cross-network coupling `K^21_pp` (rows p2, columns p1).
    pub pp21: CsrMatrix,
    pub rhs_u: [Vec<f64>; 2],
    pub rhs_p: [Vec<f64>; 2],
    pub stats: AssemblyStats,
}

impl BlockSystem {
    pub fn field_size(&self, field: Field) -> usize {
        let n = field.network();
        if field.is_velocity() {
            self.uu[n].n_rows()
        } else {
            self.pp[n].n_rows()
        }
    }

    pub fn n_dofs(&self) -> usize {
        Field::ALL.iter().map(|&f| self.field_size(f)).sum()
    }

    /// Global index range of every field.
    pub fn index_sets(&self) -> [Range<usize>; 4] {
        let mut start = 0;
        Field::ALL.map(|f| {
            let r = start..start + self.field_size(f);
            start = r.end;
            r
        })
    }

    pub fn index_set(&self, field: Field) -> Range<usize> {
        self.index_sets()[field.index()].clone()
    }

    /// Block `(row, col)`; `None` for structurally zero blocks.
    pub fn block(&self, row: Field, col: Field) -> Option<&CsrMatrix> {
        use Field::*;
        match (row, col) {
            (U1, U1) => Some(&self.uu[0]),
            (U1, P1) => Some(&self.up[0]),
            (P1, U1) => Some(&self.pu[0]),
            (P1, P1) => Some(&self.pp[0]),
            (U2, U2) => Some(&self.uu[1]),
            (U2, P2) => Some(&self.up[1]),
            (P2, U2) => Some(&self.pu[1]),
            (P2, P2) => Some(&self.pp[1]),
            (P1, P2) => Some(&self.pp12),
            (P2, P1) => Some(&self.pp21),
            _ => None,
        }
    }

    pub fn rhs(&self, field: Field) -> &[f64] {
        let n = field.network();
        if field.is_velocity() {
            &self.rhs_u[n]
        } else {
            &self.rhs_p[n]
        }
    }

    /// Sub-block over a list of fields, e.g. `[U1, P1]`.
    pub fn sub_block(&self, rows: &[Field], cols: &[Field]) -> Result<CsrMatrix> {
        let blocks: Vec<Vec<Option<&CsrMatrix>>> =
            rows.iter().map(|&r| cols.iter().map(|&c| self.block(r, c)).collect()).collect();
        let rs: Vec<usize> = rows.iter().map(|&f| self.field_size(f)).collect();
        let cs: Vec<usize> = cols.iter().map(|&f| self.field_size(f)).collect();
        Ok(CsrMatrix::block(&blocks, &rs, &cs)?)
    }

    /// Concatenated right-hand side in the global ordering.
    pub fn global_rhs(&self) -> Vec<f64> {
        Field::ALL.iter().flat_map(|&f| self.rhs(f).iter().copied()).collect()
    }

    /// Write the monolithic matrix and right-hand side as `K.mtx` and `f.mtx`.
    pub fn write_matrix_market(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let (k, f) = monolithic_view(self)?;
        mmio::write_matrix(&k, BufWriter::new(std::fs::File::create(dir.join("K.mtx"))?))?;
        mmio::write_vector(&f, BufWriter::new(std::fs::File::create(dir.join("f.mtx"))?))?;
        Ok(())
    }

    fn blocks(&self) -> [&CsrMatrix; 10] {
        [
            &self.uu[0],
            &self.up[0],
            &self.pu[0],
            &self.pp[0],
            &self.uu[1],
            &self.up[1],
            &self.pu[1],
            &self.pp[1],
            &self.pp12,
            &self.pp21,
        ]
    }
}

/// The whole system as one CSR matrix and right-hand side in the global
/// `(u1, p1, u2, p2)` ordering.
pub fn monolithic_view(system: &BlockSystem) -> Result<(CsrMatrix, Vec<f64>)> {
    let k = system.sub_block(&Field::ALL, &Field::ALL)?;
    Ok((k, system.global_rhs()))
}

/// Assemble `formulation` with default options.
pub fn assemble(
    formulation: Formulation,
    mesh: &Mesh,
    params: &DppParameters,
    bcs: &BoundarySpec,
) -> Result<BlockSystem> {
    assemble_with(formulation, mesh, params, bcs, &AssemblyOptions::default())
}

pub fn assemble_hdiv(mesh: &Mesh, params: &DppParameters, bcs: &BoundarySpec) -> Result<BlockSystem> {
    assemble(Formulation::Hdiv, mesh, params, bcs)
}

pub fn assemble_cgvms(mesh: &Mesh, params: &DppParameters, bcs: &BoundarySpec) -> Result<BlockSystem> {
    assemble(Formulation::CgVms, mesh, params, bcs)
}

pub fn assemble_dgvms(mesh: &Mesh, params: &DppParameters, bcs: &BoundarySpec) -> Result<BlockSystem> {
    assemble(Formulation::DgVms, mesh, params, bcs)
}

pub fn assemble_with(
    formulation: Formulation,
    mesh: &Mesh,
    params: &DppParameters,
    bcs: &BoundarySpec,
    opts: &AssemblyOptions,
) -> Result<BlockSystem> {
    params.validate()?;
    bcs.validate()?;
    if bcs.dim() != mesh.dim() {
        return Err(ProblemError::DimensionMismatch { mms: bcs.dim(), mesh: mesh.dim() }.into());
    }
    if opts.workers == Some(0) {
        return Err(Error::Assembly("worker count must be positive".into()));
    }
    let start = Instant::now();
    let run = || match formulation {
        Formulation::Hdiv => hdiv::assemble(mesh, params, bcs, opts),
        Formulation::CgVms => vms::assemble(mesh, params, bcs, opts, false),
        Formulation::DgVms => vms::assemble(mesh, params, bcs, opts, true),
    };
    let mut system = match opts.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Assembly(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    system.stats.wall_time = start.elapsed().as_secs_f64();
    system.stats.nnz = system.blocks().map(CsrMatrix::nnz);
    Ok(system)
}

/// Per-cell work is done in chunks of this many cells; the local results of
/// a chunk are scattered in cell order, so the matrices do not depend on the
/// worker count.
const CELL_CHUNK: usize = 4096;
/// Pending triplets per block before they are compressed and merged.
const MERGE_THRESHOLD: usize = 1 << 22;

/// Compute `local(e)` for every entity in parallel, feeding the results to
/// `scatter` in entity order.
fn for_each_ordered<L, F, S>(n: usize, local: F, mut scatter: S) -> Result<()>
where
    L: Send,
    F: Fn(usize) -> Result<L> + Sync,
    S: FnMut(usize, L) -> Result<()>,
{
    let mut start = 0;
    while start < n {
        let end = (start + CELL_CHUNK).min(n);
        let locals: Vec<L> = (start..end).into_par_iter().map(&local).collect::<Result<_>>()?;
        for (e, l) in (start..end).zip(locals) {
            scatter(e, l)?;
        }
        start = end;
    }
    Ok(())
}

/// Triplet accumulator for one block that merges into CSR as it fills.
struct Accum {
    n_rows: usize,
    n_cols: usize,
    merged: CsrMatrix,
    pending: Vec<(usize, usize, f64)>,
}

impl Accum {
    fn new(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, merged: CsrMatrix::zeros(n_rows, n_cols), pending: Vec::new() }
    }

    #[inline]
    fn push(&mut self, r: usize, c: usize, v: f64) {
        self.pending.push((r, c, v));
    }

    fn flush_if_full(&mut self) -> Result<()> {
        if self.pending.len() >= MERGE_THRESHOLD {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if !self.pending.is_empty() {
            let chunk = CsrMatrix::from_triplets(self.n_rows, self.n_cols, &self.pending)?;
            self.merged = if self.merged.nnz() == 0 { chunk } else { self.merged.add(1.0, &chunk, 1.0)? };
            self.pending.clear();
        }
        Ok(())
    }

    fn finish(mut self) -> Result<CsrMatrix> {
        self.flush()?;
        Ok(self.merged)
    }
}

/// The ten block accumulators and four load vectors under construction.
struct Builder {
    uu: [Accum; 2],
    up: [Accum; 2],
    pu: [Accum; 2],
    pp: [Accum; 2],
    pp12: Accum,
    pp21: Accum,
    rhs_u: [Vec<f64>; 2],
    rhs_p: [Vec<f64>; 2],
}

impl Builder {
    fn new(n_u: usize, n_p: usize) -> Self {
        let pair = |r, c| [Accum::new(r, c), Accum::new(r, c)];
        Self {
            uu: pair(n_u, n_u),
            up: pair(n_u, n_p),
            pu: pair(n_p, n_u),
            pp: pair(n_p, n_p),
            pp12: Accum::new(n_p, n_p),
            pp21: Accum::new(n_p, n_p),
            rhs_u: [vec![0.0; n_u], vec![0.0; n_u]],
            rhs_p: [vec![0.0; n_p], vec![0.0; n_p]],
        }
    }

    fn flush_if_full(&mut self) -> Result<()> {
        for a in self.accums_mut() {
            a.flush_if_full()?;
        }
        Ok(())
    }

    fn accums_mut(&mut self) -> [&mut Accum; 10] {
        let [uu0, uu1] = &mut self.uu;
        let [up0, up1] = &mut self.up;
        let [pu0, pu1] = &mut self.pu;
        let [pp0, pp1] = &mut self.pp;
        [uu0, up0, pu0, pp0, uu1, up1, pu1, pp1, &mut self.pp12, &mut self.pp21]
    }

    fn finish(self, formulation: Formulation, mesh: &Mesh) -> Result<BlockSystem> {
        let [uu0, uu1] = self.uu;
        let [up0, up1] = self.up;
        let [pu0, pu1] = self.pu;
        let [pp0, pp1] = self.pp;
        Ok(BlockSystem {
            formulation,
            cell_kind: mesh.cell_kind(),
            dim: mesh.dim(),
            uu: [uu0.finish()?, uu1.finish()?],
            up: [up0.finish()?, up1.finish()?],
            pu: [pu0.finish()?, pu1.finish()?],
            pp: [pp0.finish()?, pp1.finish()?],
            pp12: self.pp12.finish()?,
            pp21: self.pp21.finish()?,
            rhs_u: self.rhs_u,
            rhs_p: self.rhs_p,
            stats: AssemblyStats::default(),
        })
    }
}

/// Strong Dirichlet data on one field: `values[i]` is imposed where
/// `mask[i]` holds.
struct Constraint {
    mask: Vec<bool>,
    values: Vec<f64>,
}

impl Constraint {
    fn none(n: usize) -> Self {
        Self { mask: vec![false; n], values: vec![0.0; n] }
    }

    fn is_empty(&self) -> bool {
        !self.mask.contains(&true)
    }

    fn get(&self, i: usize) -> Option<f64> {
        self.mask[i].then(|| self.values[i])
    }
}

/// Zero the constrained columns of `a`, moving their known values into `rhs`,
/// and zero the constrained rows.
fn eliminate(a: &mut CsrMatrix, rows: Option<&Constraint>, cols: Option<&Constraint>, rhs: &mut [f64]) {
    let indptr = a.indptr().to_vec();
    let indices = a.indices().to_vec();
    let data = a.data_mut();
    for r in 0..indptr.len() - 1 {
        let row_fixed = rows.is_some_and(|c| c.mask[r]);
        for k in indptr[r]..indptr[r + 1] {
            if row_fixed {
                data[k] = 0.0;
            } else if let Some(g) = cols.and_then(|c| c.get(indices[k])) {
                rhs[r] -= data[k] * g;
                data[k] = 0.0;
            }
        }
    }
}

/// Replace the constrained rows of a diagonal block by `d x_i = d g_i`,
/// keeping the original diagonal `d` (or 1 where it vanishes).
fn set_dirichlet_rows(a: &mut CsrMatrix, fixed: &Constraint, rhs: &mut [f64]) {
    let diag = a.diagonal();
    let indptr = a.indptr().to_vec();
    let indices = a.indices().to_vec();
    let data = a.data_mut();
    for r in 0..indptr.len() - 1 {
        let Some(g) = fixed.get(r) else { continue };
        let d = if diag[r] != 0.0 { diag[r] } else { 1.0 };
        for k in indptr[r]..indptr[r + 1] {
            data[k] = if indices[k] == r { d } else { 0.0 };
        }
        rhs[r] = d * g;
    }
}

impl BlockSystem {
    /// Impose strong pressure values. Columns are eliminated from every
    /// block, which keeps `K_pu = -K_up^T` and `K12 = K21^T`.
    fn constrain_pressure(&mut self, fixed: &[Constraint; 2]) {
        if fixed.iter().all(Constraint::is_empty) {
            return;
        }
        for n in 0..2 {
            let m = 1 - n;
            let (cross_nm, cross_mn) =
                if n == 0 { (&mut self.pp12, &mut self.pp21) } else { (&mut self.pp21, &mut self.pp12) };
            eliminate(&mut self.up[n], None, Some(&fixed[n]), &mut self.rhs_u[n]);
            eliminate(&mut self.pu[n], Some(&fixed[n]), None, &mut self.rhs_p[n]);
            eliminate(cross_nm, Some(&fixed[n]), None, &mut self.rhs_p[n]);
            eliminate(cross_mn, Some(&fixed[m]), Some(&fixed[n]), &mut self.rhs_p[m]);
            set_dirichlet_rows(&mut self.pp[n], &fixed[n], &mut self.rhs_p[n]);
            eliminate_off_diagonal(&mut self.pp[n], &fixed[n], &fixed[n], &mut self.rhs_p[n]);
            self.pp[n] = self.pp[n].prune_keep_diagonal();
        }
        for n in 0..2 {
            self.up[n] = self.up[n].prune();
            self.pu[n] = self.pu[n].prune();
        }
        self.pp12 = self.pp12.prune();
        self.pp21 = self.pp21.prune();
    }

    /// Impose strong normal fluxes on velocity DoFs.
    fn constrain_velocity(&mut self, fixed: &[Constraint; 2]) {
        for n in 0..2 {
            if fixed[n].is_empty() {
                continue;
            }
            eliminate(&mut self.up[n], Some(&fixed[n]), None, &mut self.rhs_u[n]);
            eliminate(&mut self.pu[n], None, Some(&fixed[n]), &mut self.rhs_p[n]);
            set_dirichlet_rows(&mut self.uu[n], &fixed[n], &mut self.rhs_u[n]);
            eliminate_off_diagonal(&mut self.uu[n], &fixed[n], &fixed[n], &mut self.rhs_u[n]);
            self.uu[n] = self.uu[n].prune_keep_diagonal();
            self.up[n] = self.up[n].prune();
            self.pu[n] = self.pu[n].prune();
        }
    }
}

/// Column elimination in a diagonal block after its constrained rows were
/// replaced: free rows lose their constrained columns.
fn eliminate_off_diagonal(a: &mut CsrMatrix, rows: &Constraint, cols: &Constraint, rhs: &mut [f64]) {
    let indptr = a.indptr().to_vec();
    let indices = a.indices().to_vec();
    let data = a.data_mut();
    for r in 0..indptr.len() - 1 {
        if rows.mask[r] {
            continue;
        }
        for k in indptr[r]..indptr[r + 1] {
            if let Some(g) = cols.get(indices[k]) {
                rhs[r] -= data[k] * g;
                data[k] = 0.0;
            }
        }
    }
}

impl CsrMatrix {
    /// Drop explicit zeros but keep every diagonal entry.
    fn prune_keep_diagonal(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows() {
            for (c, v) in self.row(r) {
                if v != 0.0 || r == c {
                    t.push((r, c, v));
                }
            }
        }
        CsrMatrix::from_triplets(self.n_rows(), self.n_cols(), &t).expect("indices come from a valid matrix")
    }
}

/// A solution split back into its fields, able to evaluate itself inside
/// any cell of the mesh it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub formulation: Formulation,
    pub u: [Vec<f64>; 2],
    pub p: [Vec<f64>; 2],
}

impl DiscreteSolution {
    /// Split a global vector using the index sets of `system`.
    pub fn from_monolithic(system: &BlockSystem, x: &[f64]) -> Result<Self> {
        if x.len() != system.n_dofs() {
            return Err(crate::linalg::LinalgError::DimensionMismatch {
                context: "solution",
                expected: system.n_dofs(),
                found: x.len(),
            }
            .into());
        }
        let sets = system.index_sets();
        let take = |f: Field| x[sets[f.index()].clone()].to_vec();
        Ok(Self {
            formulation: system.formulation,
            u: [take(Field::U1), take(Field::U2)],
            p: [take(Field::P1), take(Field::P2)],
        })
    }

    /// Field values at reference point `xi` of `cell`.
    pub fn eval(&self, mesh: &Mesh, cell: usize, xi: &Point) -> Result<FieldValues> {
        let geom = mesh.cell_geometry(cell)?;
        let kind = mesh.cell_kind();
        let dim = mesh.dim();
        let mut out = FieldValues::default();
        match self.formulation {
            Formulation::Hdiv => {
                let facets = mesh.cell_facets(cell);
                let signs: Vec<f64> =
                    (0..kind.n_facets()).map(|l| crate::elements::facet_sign(mesh, cell, l)).collect();
                let (values, _, _) = local::rt_at(&geom, xi, &signs);
                for n in 0..2 {
                    let mut u = [0.0; 3];
                    for (i, &f) in facets.iter().enumerate() {
                        for c in 0..dim {
                            u[c] += self.u[n][f] * values[i][c];
                        }
                    }
                    set_network(&mut out, n, u, self.p[n][cell]);
                }
            }
            Formulation::CgVms | Formulation::DgVms => {
                let p = local::nodal_at(&geom, xi);
                let verts = mesh.cell(cell);
                let nv = kind.n_vertices();
                for n in 0..2 {
                    let mut u = [0.0; 3];
                    let mut pr = 0.0;
                    for a in 0..nv {
                        let node = if self.formulation == Formulation::CgVms { verts[a] } else { cell * nv + a };
                        pr += self.p[n][node] * p.values[a];
                        for c in 0..dim {
                            u[c] += self.u[n][node * dim + c] * p.values[a];
                        }
                    }
                    set_network(&mut out, n, u, pr);
                }
            }
        }
        Ok(out)
    }

    /// Per-cell `∫_K div u1 + (β/μ)(p1 - p2)` of an H(div) solution.
    pub fn mass_balance_residuals(&self, mesh: &Mesh, params: &DppParameters) -> Result<Vec<f64>> {
        if self.formulation != Formulation::Hdiv {
            return Err(Error::Assembly("cellwise mass balance needs the H(div) formulation".into()));
        }
        let rule = quadrature_rule(mesh.cell_kind(), 2)?;
        (0..mesh.n_cells())
            .map(|c| {
                let geom = mesh.cell_geometry(c)?;
                let signs: Vec<f64> =
                    (0..mesh.cell_kind().n_facets()).map(|l| crate::elements::facet_sign(mesh, c, l)).collect();
                let cell = local::hdiv_cell(&geom, &rule, &signs, &[0.0; 3]);
                let div: f64 = mesh.cell_facets(c).iter().zip(&cell.div).map(|(&f, d)| self.u[0][f] * d).sum();
                Ok(div + params.beta / params.mu * (self.p[0][c] - self.p[1][c]) * cell.volume)
            })
            .collect()
    }
}

fn set_network(out: &mut FieldValues, n: usize, u: Point, p: f64) {
    if n == 0 {
        out.u1 = u;
        out.p1 = p;
    } else {
        out.u2 = u;
        out.p2 = p;
    }
}
