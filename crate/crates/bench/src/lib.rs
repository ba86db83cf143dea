//! Shared fixtures for the benchmarks.

use dpp_core::mesh::generate_unit_mesh;
use dpp_core::problem::boundary_data;
use dpp_core::{BlockSystem, BoundarySpec, CellKind, DppParameters, Formulation, ManufacturedSolution, Mesh};

/// Unit mesh with the benchmark boundary data and default parameters.
pub fn problem(kind: CellKind, n_div: usize) -> (Mesh, BoundarySpec, DppParameters) {
    let dim = kind.dim();
    let mesh = generate_unit_mesh(dim, kind, n_div).expect("valid mesh size");
    let bcs = boundary_data(&ManufacturedSolution::for_dim(dim), &mesh).expect("benchmark data");
    let params = if dim == 2 { DppParameters::paper_2d() } else { DppParameters::paper_3d() };
    (mesh, bcs, params)
}

/// Assembled benchmark system.
pub fn system(formulation: Formulation, kind: CellKind, n_div: usize) -> BlockSystem {
    let (mesh, bcs, params) = problem(kind, n_div);
    dpp_core::assembly::assemble(formulation, &mesh, &params, &bcs).expect("assembly succeeds")
}
