//! Lowest-order Raviart-Thomas velocities with cellwise-constant pressures.

use super::local::{self, hdiv_cell};
use super::AssemblyOptions;
use super::{for_each_ordered, BlockSystem, Builder, Constraint, Formulation};
use crate::elements::{facet_quadrature, facet_sign, quadrature_rule};
use crate::geometry;
use crate::mesh::Mesh;
use crate::problem::{BcKind, BoundarySpec, DppParameters};
use crate::Result;

pub(super) fn assemble(
    mesh: &Mesh,
    params: &DppParameters,
    bcs: &BoundarySpec,
    opts: &AssemblyOptions,
) -> Result<BlockSystem> {
    let kind = mesh.cell_kind();
    let nf = kind.n_facets();
    let rule = quadrature_rule(kind, opts.quad_degree)?;
    let load_rule = quadrature_rule(kind, opts.load_degree)?;
    let body = params.gamma_b;
    let has_body = body.iter().any(|&g| g != 0.0);
    let ratio = params.beta / params.mu;

    let mut b = Builder::new(mesh.n_facets(), mesh.n_cells());
    for_each_ordered(
        mesh.n_cells(),
        |c| {
            let geom = mesh.cell_geometry(c)?;
            let signs: Vec<f64> = (0..nf).map(|l| facet_sign(mesh, c, l)).collect();
            let mut cell = hdiv_cell(&geom, &rule, &signs, &[0.0; 3]);
            if has_body {
                cell.load = hdiv_cell(&geom, &load_rule, &signs, &body).load;
            }
            Ok(cell)
        },
        |c, cell| {
            let facets = mesh.cell_facets(c);
            for n in 0..2 {
                let resist = params.mu / params.permeability(n);
                for (i, &fi) in facets.iter().enumerate() {
                    for (j, &fj) in facets.iter().enumerate() {
                        b.uu[n].push(fi, fj, resist * cell.mass.at(i, j));
                    }
                    b.up[n].push(fi, c, -cell.div[i]);
                    b.pu[n].push(c, fi, cell.div[i]);
                    b.rhs_u[n][fi] += cell.load[i];
                }
                b.pp[n].push(c, c, ratio * cell.volume);
            }
            b.pp12.push(c, c, -ratio * cell.volume);
            b.pp21.push(c, c, -ratio * cell.volume);
            b.flush_if_full()
        },
    )?;

    let mut fluxes = [Constraint::none(mesh.n_facets()), Constraint::none(mesh.n_facets())];
    if opts.boundary_terms {
        for (f, facet) in mesh.boundary_facets() {
            let c = facet.plus.cell;
            let geom = mesh.cell_geometry(c)?;
            let signs: Vec<f64> = (0..nf).map(|l| facet_sign(mesh, c, l)).collect();
            let pts: Vec<_> = facet.vertices.iter().map(|&v| *mesh.vertex(v)).collect();
            let quad = facet_quadrature(&pts, mesh.dim(), opts.load_degree)?;
            for n in 0..2 {
                match bcs.facet_kind(n, facet, mesh) {
                    BcKind::Pressure => {
                        let mut acc = 0.0;
                        for (x, w) in &quad {
                            let xi = local::clamp_reference(kind, geom.inverse_map(x));
                            let (values, _, _) = local::rt_at(&geom, &xi, &signs);
                            let wn = geometry::dot(&values[facet.plus.local], &facet.normal);
                            acc += w * wn * bcs.pressure(n, x, params);
                        }
                        b.rhs_u[n][f] -= acc;
                    }
                    BcKind::Velocity => {
                        let flux: f64 =
                            quad.iter().map(|(x, w)| w * bcs.normal_velocity(n, x, &facet.normal, params)).sum();
                        fluxes[n].mask[f] = true;
                        fluxes[n].values[f] = flux;
                    }
                }
            }
        }
    }
    let mut system = b.finish(Formulation::Hdiv, mesh)?;
    system.constrain_velocity(&fluxes);
    Ok(system)
}
