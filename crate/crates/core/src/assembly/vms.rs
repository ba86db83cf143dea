//! Equal-order nodal velocities and pressures with multiscale stabilization,
//! continuous (CG) or discontinuous with interior-penalty facet terms (DG).

use super::local::{self, nodal_cell, Dense, NodalCell};
use super::{for_each_ordered, AssemblyOptions, BlockSystem, Builder, Constraint, Formulation};
use crate::elements::{facet_quadrature, quadrature_rule};
use crate::linalg::CsrMatrix;
use crate::mesh::{FacetRecord, Mesh};
use crate::problem::{BcKind, BoundarySpec, DppParameters, ProblemError};
use crate::{Error, Result};

/// Global node of local vertex `a` of `cell`.
#[inline]
fn node(mesh: &Mesh, dg: bool, cell: usize, a: usize) -> usize {
    if dg {
        cell * mesh.cell_kind().n_vertices() + a
    } else {
        mesh.cell(cell)[a]
    }
}

fn n_nodes(mesh: &Mesh, dg: bool) -> usize {
    if dg {
        mesh.n_cells() * mesh.cell_kind().n_vertices()
    } else {
        mesh.n_vertices()
    }
}

pub(super) fn assemble(
    mesh: &Mesh,
    params: &DppParameters,
    bcs: &BoundarySpec,
    opts: &AssemblyOptions,
    dg: bool,
) -> Result<BlockSystem> {
    if !dg && opts.boundary_terms && bcs.has_velocity_sides() {
        return Err(Error::Assembly("CG-VMS supports pressure boundary conditions only".into()));
    }
    if dg {
        for (name, value) in [("eta_u", params.eta_u), ("eta_p", params.eta_p)] {
            if value < 0.0 {
                return Err(ProblemError::InvalidParameter { name, value, reason: "must be non-negative" }.into());
            }
        }
    }
    let kind = mesh.cell_kind();
    let dim = mesh.dim();
    let nv = kind.n_vertices();
    let rule = quadrature_rule(kind, opts.quad_degree)?;
    let load_rule = quadrature_rule(kind, opts.load_degree)?;
    let body = params.gamma_b;
    let has_body = body.iter().any(|&g| g != 0.0);
    let ratio = params.beta / params.mu;
    let n_p = n_nodes(mesh, dg);
    let mut b = Builder::new(n_p * dim, n_p);

    for_each_ordered(
        mesh.n_cells(),
        |c| {
            let geom = mesh.cell_geometry(c)?;
            let mut cell = nodal_cell(&geom, &rule, &[0.0; 3]);
            if has_body {
                let loads = nodal_cell(&geom, &load_rule, &body);
                cell.load_u = loads.load_u;
                cell.load_grad = loads.load_grad;
            }
            Ok(cell)
        },
        |c, cell: NodalCell| {
            let g: Vec<usize> = (0..nv).map(|a| node(mesh, dg, c, a)).collect();
            for n in 0..2 {
                let k = params.permeability(n);
                let resist = params.mu / k;
                let mobility = k / params.mu;
                for a in 0..nv {
                    for bb in 0..nv {
                        let m = cell.mass.at(a, bb);
                        for d in 0..dim {
                            b.uu[n].push(g[a] * dim + d, g[bb] * dim + d, 0.5 * resist * m);
                            let coupling = cell.div.at(a * dim + d, bb) + 0.5 * cell.grad.at(a * dim + d, bb);
                            b.up[n].push(g[a] * dim + d, g[bb], -coupling);
                            b.pu[n].push(g[bb], g[a] * dim + d, coupling);
                        }
                        b.pp[n].push(g[a], g[bb], 0.5 * mobility * cell.stiffness.at(a, bb) + ratio * m);
                    }
                    for d in 0..dim {
                        b.rhs_u[n][g[a] * dim + d] += 0.5 * cell.load_u[a * dim + d];
                    }
                    b.rhs_p[n][g[a]] += 0.5 * mobility * cell.load_grad[a];
                }
            }
            for a in 0..nv {
                for bb in 0..nv {
                    let m = cell.mass.at(a, bb);
                    b.pp12.push(g[a], g[bb], -ratio * m);
                    b.pp21.push(g[a], g[bb], -ratio * m);
                }
            }
            b.flush_if_full()
        },
    )?;

    if !opts.boundary_terms {
        return b.finish(formulation(dg), mesh);
    }

    if dg {
        let interior: Vec<usize> = mesh.interior_facets().map(|(f, _)| f).collect();
        let h = mesh.h();
        for_each_ordered(
            interior.len(),
            |i| interior_facet(mesh, &mesh.facets()[interior[i]], opts.quad_degree),
            |i, loc| {
                let facet = &mesh.facets()[interior[i]];
                let cells = [facet.plus.cell, facet.minus.expect("interior facet").cell];
                let pnode = |s: usize, a: usize| cells[s] * nv + a;
                let unode = |r: usize| pnode(r / (nv * dim), (r / dim) % nv) * dim + r % dim;
                for n in 0..2 {
                    let k = params.permeability(n);
                    let cu = params.eta_u * h * params.mu / k;
                    let cp = params.eta_p / h * k / params.mu;
                    for r in 0..loc.pen_u.rows {
                        for s in 0..loc.pen_u.cols {
                            b.uu[n].push(unode(r), unode(s), cu * loc.pen_u.at(r, s));
                        }
                        for s in 0..loc.avg_up.cols {
                            let v = loc.avg_up.at(r, s);
                            let ps = pnode(s / nv, s % nv);
                            b.up[n].push(unode(r), ps, v);
                            b.pu[n].push(ps, unode(r), -v);
                        }
                    }
                    for r in 0..loc.pen_p.rows {
                        for s in 0..loc.pen_p.cols {
                            b.pp[n].push(pnode(r / nv, r % nv), pnode(s / nv, s % nv), cp * loc.pen_p.at(r, s));
                        }
                    }
                }
                b.flush_if_full()
            },
        )?;
    }

    let mut fixed = [Constraint::none(n_p), Constraint::none(n_p)];
    for (_, facet) in mesh.boundary_facets() {
        let c = facet.plus.cell;
        let geom = mesh.cell_geometry(c)?;
        let pts: Vec<_> = facet.vertices.iter().map(|&v| *mesh.vertex(v)).collect();
        let quad = facet_quadrature(&pts, dim, opts.load_degree)?;
        let traces: Vec<[f64; 8]> = quad.iter().map(|(x, _)| local::nodal_trace(&geom, x)).collect();
        for n in 0..2 {
            match bcs.facet_kind(n, facet, mesh) {
                BcKind::Pressure => {
                    for ((x, w), phi) in quad.iter().zip(&traces) {
                        let p0 = bcs.pressure(n, x, params);
                        for a in 0..nv {
                            for d in 0..dim {
                                b.rhs_u[n][node(mesh, dg, c, a) * dim + d] -= w * phi[a] * facet.normal[d] * p0;
                            }
                        }
                    }
                    if !dg {
                        for &v in &facet.vertices {
                            fixed[n].mask[v] = true;
                            fixed[n].values[v] = bcs.pressure(n, mesh.vertex(v), params);
                        }
                    }
                }
                BcKind::Velocity => {
                    let bilinear = facet_quadrature(&pts, dim, opts.quad_degree)?;
                    for (x, w) in &bilinear {
                        let phi = local::nodal_trace(&geom, x);
                        for a in 0..nv {
                            for bb in 0..nv {
                                for d in 0..dim {
                                    let v = w * phi[a] * facet.normal[d] * phi[bb];
                                    let (ui, pj) = (node(mesh, dg, c, a) * dim + d, node(mesh, dg, c, bb));
                                    b.up[n].push(ui, pj, v);
                                    b.pu[n].push(pj, ui, -v);
                                }
                            }
                        }
                    }
                    for ((x, w), phi) in quad.iter().zip(&traces) {
                        let un = bcs.normal_velocity(n, x, &facet.normal, params);
                        for a in 0..nv {
                            b.rhs_p[n][node(mesh, dg, c, a)] -= w * phi[a] * un;
                        }
                    }
                }
            }
        }
    }
    let mut system = b.finish(formulation(dg), mesh)?;
    system.constrain_pressure(&fixed);
    Ok(system)
}

fn formulation(dg: bool) -> Formulation {
    if dg {
        Formulation::DgVms
    } else {
        Formulation::CgVms
    }
}

/// Unscaled jump and average integrals over one interior facet. Local
/// indices run over `(side, vertex[, component])` with the plus cell first.
pub(super) struct FacetLocal {
    /// `∫ [[w]] [[u]]`
    pub(super) pen_u: Dense,
    /// `∫ [[w]] {p}`
    pub(super) avg_up: Dense,
    /// `∫ [[q]] [[p]]`
    pub(super) pen_p: Dense,
}

pub(super) fn interior_facet(mesh: &Mesh, facet: &FacetRecord, degree: usize) -> Result<FacetLocal> {
    let dim = mesh.dim();
    let nv = mesh.cell_kind().n_vertices();
    let minus = facet.minus.expect("interior facet");
    let geoms = [mesh.cell_geometry(facet.plus.cell)?, mesh.cell_geometry(minus.cell)?];
    let pts: Vec<_> = facet.vertices.iter().map(|&v| *mesh.vertex(v)).collect();
    let quad = facet_quadrature(&pts, dim, degree)?;
    let nu = 2 * nv * dim;
    let np = 2 * nv;
    let mut loc = FacetLocal { pen_u: Dense::zeros(nu, nu), avg_up: Dense::zeros(nu, np), pen_p: Dense::zeros(np, np) };
    let sigma = [1.0, -1.0];
    let n = facet.normal;
    for (x, w) in &quad {
        let phi = [local::nodal_trace(&geoms[0], x), local::nodal_trace(&geoms[1], x)];
        // jump of each vector DoF and of each scalar DoF
        let mut ju = vec![0.0; nu];
        let mut jp = vec![0.0; np];
        let mut avg = vec![0.0; np];
        for s in 0..2 {
            for a in 0..nv {
                jp[s * nv + a] = sigma[s] * phi[s][a];
                avg[s * nv + a] = 0.5 * phi[s][a];
                for d in 0..dim {
                    ju[(s * nv + a) * dim + d] = sigma[s] * phi[s][a] * n[d];
                }
            }
        }
        for r in 0..nu {
            if ju[r] == 0.0 {
                continue;
            }
            for s in 0..nu {
                loc.pen_u.add(r, s, w * ju[r] * ju[s]);
            }
            for s in 0..np {
                loc.avg_up.add(r, s, w * ju[r] * avg[s]);
            }
        }
        for r in 0..np {
            for s in 0..np {
                loc.pen_p.add(r, s, w * jp[r] * jp[s]);
            }
        }
    }
    Ok(loc)
}

/// Interior-penalty operators of the macro network over the DG numbering:
/// `(pressure, velocity)` with the coefficients `(η_p/h) k1/μ` and
/// `η_u h μ/k1`.
pub fn dg_jump_penalty(mesh: &Mesh, params: &DppParameters) -> Result<(CsrMatrix, CsrMatrix)> {
    let dim = mesh.dim();
    let nv = mesh.cell_kind().n_vertices();
    let n_p = n_nodes(mesh, true);
    let h = mesh.h();
    let cp = params.eta_p / h * params.k1 / params.mu;
    let cu = params.eta_u * h * params.mu / params.k1;
    let mut tp = Vec::new();
    let mut tu = Vec::new();
    for (_, facet) in mesh.interior_facets() {
        let loc = interior_facet(mesh, facet, 2)?;
        let cells = [facet.plus.cell, facet.minus.expect("interior facet").cell];
        let pnode = |r: usize| cells[r / nv] * nv + r % nv;
        for r in 0..loc.pen_p.rows {
            for s in 0..loc.pen_p.cols {
                tp.push((pnode(r), pnode(s), cp * loc.pen_p.at(r, s)));
            }
        }
        for r in 0..loc.pen_u.rows {
            for s in 0..loc.pen_u.cols {
                let ur = pnode(r / dim) * dim + r % dim;
                let us = pnode(s / dim) * dim + s % dim;
                tu.push((ur, us, cu * loc.pen_u.at(r, s)));
            }
        }
    }
    Ok((CsrMatrix::from_triplets(n_p, n_p, &tp)?, CsrMatrix::from_triplets(n_p * dim, n_p * dim, &tu)?))
}

/// Penalty energies `(pressure, velocity)` of DG fields of the macro
/// network, accumulated as weighted squared jumps facet by facet. Unlike
/// `xᵀ P x` with the assembled operator this does not cancel large terms,
/// so vanishing jumps give energies at the level of squared round-off.
pub fn dg_jump_energy(mesh: &Mesh, params: &DppParameters, p: &[f64], u: &[f64]) -> Result<(f64, f64)> {
    let dim = mesh.dim();
    let nv = mesh.cell_kind().n_vertices();
    let n_p = n_nodes(mesh, true);
    if p.len() != n_p || u.len() != n_p * dim {
        return Err(Error::Assembly(format!("expected {n_p} pressure and {} velocity values", n_p * dim)));
    }
    let h = mesh.h();
    let cp = params.eta_p / h * params.k1 / params.mu;
    let cu = params.eta_u * h * params.mu / params.k1;
    let (mut ep, mut eu) = (0.0, 0.0);
    for (_, facet) in mesh.interior_facets() {
        let cells = [facet.plus.cell, facet.minus.expect("interior facet").cell];
        let geoms = [mesh.cell_geometry(cells[0])?, mesh.cell_geometry(cells[1])?];
        let pts: Vec<_> = facet.vertices.iter().map(|&v| *mesh.vertex(v)).collect();
        for (x, w) in facet_quadrature(&pts, dim, 2)? {
            let mut side_p = [0.0; 2];
            let mut side_un = [0.0; 2];
            for s in 0..2 {
                let phi = local::nodal_trace(&geoms[s], &x);
                for a in 0..nv {
                    let i = cells[s] * nv + a;
                    side_p[s] += phi[a] * p[i];
                    for d in 0..dim {
                        side_un[s] += phi[a] * u[i * dim + d] * facet.normal[d];
                    }
                }
            }
            ep += cp * w * (side_p[0] - side_p[1]).powi(2);
            eu += cu * w * (side_un[0] - side_un[1]).powi(2);
        }
    }
    Ok((ep, eu))
}
