//! Structured meshes of the unit square and unit cube.
//!
//! Vertices sit on the lattice `i / n_div` along every axis. Cells are
//! stored with a local vertex ordering that matches the reference cell
//! used by [`crate::elements`]:
//!
//! * TRI: `(0,0) (1,0) (0,1)` images, counter-clockwise.
//! * TET: origin and the three unit-axis points, positive orientation.
//! * QUAD/HEX: lexicographic, local vertex `a + 2b (+ 4c)` sits at
//!   reference coordinate `(a, b, c)`.
//!
//! Facets carry a single stored normal pointing out of the "+" cell, the
//! lower-indexed of the two adjacent cells.

mod cell;
mod facets;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

pub(crate) use cell::multilinear_shape;
pub use cell::CellGeometry;
pub use facets::{facet_adjacency, CellSide, FacetRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("n_div must be at least 1")]
    ZeroDivisions,
    #[error("cell kind {kind} is not a {dim}D cell")]
    DimensionMismatch { dim: usize, kind: CellKind },
    #[error("cell {cell} is inverted (Jacobian determinant {det:.3e})")]
    InvertedCell { cell: usize, det: f64 },
    #[error("cell index {0} out of range")]
    CellOutOfRange(usize),
    #[error("facet shared by {0} cells")]
    NonManifoldFacet(usize),
    #[error("unknown cell kind '{0}'")]
    UnknownCellKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Tri,
    Quad,
    Tet,
    Hex,
}

impl CellKind {
    pub const ALL: [CellKind; 4] = [CellKind::Tri, CellKind::Quad, CellKind::Tet, CellKind::Hex];

    pub fn dim(self) -> usize {
        match self {
            CellKind::Tri | CellKind::Quad => 2,
            CellKind::Tet | CellKind::Hex => 3,
        }
    }

    pub fn is_simplex(self) -> bool {
        matches!(self, CellKind::Tri | CellKind::Tet)
    }

    pub fn n_vertices(self) -> usize {
        match self {
            CellKind::Tri => 3,
            CellKind::Quad | CellKind::Tet => 4,
            CellKind::Hex => 8,
        }
    }

    pub fn n_facets(self) -> usize {
        match self {
            CellKind::Tri => 3,
            CellKind::Quad | CellKind::Tet => 4,
            CellKind::Hex => 6,
        }
    }

    /// Measure of the reference cell.
    pub fn reference_measure(self) -> f64 {
        match self {
            CellKind::Tri => 0.5,
            CellKind::Tet => 1.0 / 6.0,
            CellKind::Quad | CellKind::Hex => 1.0,
        }
    }

    /// Local vertex indices of each facet.
    ///
    /// Simplex facet `i` is opposite vertex `i`. Tensor-product facet
    /// `2 * axis + side` lies on `ξ_axis = side`, its vertices listed in
    /// tensor order over the remaining axes.
    pub fn facet_vertices(self) -> &'static [&'static [usize]] {
        match self {
            CellKind::Tri => &[&[1, 2], &[0, 2], &[0, 1]],
            CellKind::Tet => &[&[1, 2, 3], &[0, 2, 3], &[0, 1, 3], &[0, 1, 2]],
            CellKind::Quad => &[&[0, 2], &[1, 3], &[0, 1], &[2, 3]],
            CellKind::Hex => {
                &[&[0, 2, 4, 6], &[1, 3, 5, 7], &[0, 1, 4, 5], &[2, 3, 6, 7], &[0, 1, 2, 3], &[4, 5, 6, 7]]
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Tri => "tri",
            CellKind::Quad => "quad",
            CellKind::Tet => "tet",
            CellKind::Hex => "hex",
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CellKind {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tri" => Ok(CellKind::Tri),
            "quad" => Ok(CellKind::Quad),
            "tet" => Ok(CellKind::Tet),
            "hex" => Ok(CellKind::Hex),
            other => Err(MeshError::UnknownCellKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    cell_kind: CellKind,
    n_div: usize,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    facets: Vec<FacetRecord>,
    cell_facets: Vec<usize>,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_kind(&self) -> CellKind {
        self.cell_kind
    }

    pub fn n_div(&self) -> usize {
        self.n_div
    }

    /// Characteristic mesh size `1 / n_div`.
    pub fn h(&self) -> f64 {
        1.0 / self.n_div as f64
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Point {
        &self.vertices[v]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / self.cell_kind.n_vertices()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let nv = self.cell_kind.n_vertices();
        &self.cells[c * nv..(c + 1) * nv]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.cell_kind.n_vertices())
    }

    pub fn facets(&self) -> &[FacetRecord] {
        &self.facets
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    /// Global facet indices of cell `c`, in local facet order.
    pub fn cell_facets(&self, c: usize) -> &[usize] {
        let nf = self.cell_kind.n_facets();
        &self.cell_facets[c * nf..(c + 1) * nf]
    }

    pub fn interior_facets(&self) -> impl Iterator<Item = (usize, &FacetRecord)> {
        self.facets.iter().enumerate().filter(|(_, f)| f.minus.is_some())
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = (usize, &FacetRecord)> {
        self.facets.iter().enumerate().filter(|(_, f)| f.minus.is_none())
    }

    pub fn n_boundary_facets(&self) -> usize {
        self.boundary_facets().count()
    }

    /// Geometry of a cell, rejecting inverted cells.
    pub fn cell_geometry(&self, c: usize) -> Result<CellGeometry, MeshError> {
        if c >= self.n_cells() {
            return Err(MeshError::CellOutOfRange(c));
        }
        let geom = self.cell_geometry_unchecked(c);
        let det = geom.min_vertex_det();
        if det <= 0.0 {
            return Err(MeshError::InvertedCell { cell: c, det });
        }
        Ok(geom)
    }

    pub(crate) fn cell_geometry_unchecked(&self, c: usize) -> CellGeometry {
        let vertices = self.cell(c).iter().map(|&v| self.vertices[v]).collect();
        CellGeometry::new(self.cell_kind, vertices)
    }

    /// Vertices lying on the boundary of the unit domain.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_vertices()];
        for (_, f) in self.boundary_facets() {
            for &v in &f.vertices {
                mask[v] = true;
            }
        }
        mask
    }

    /// Plain-text dump: a `vertices` block followed by a `cells` block.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "vertices {}", self.n_vertices())?;
        for v in &self.vertices {
            let coords: Vec<String> = v[..self.dim].iter().map(|x| format!("{x}")).collect();
            writeln!(out, "{}", coords.join(" "))?;
        }
        writeln!(out, "cells {} {}", self.n_cells(), self.cell_kind)?;
        for c in self.cells() {
            let ids: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", ids.join(" "))?;
        }
        Ok(())
    }
}

/// Generate a structured mesh of the unit square (`dim = 2`) or cube.
pub fn generate_unit_mesh(dim: usize, cell_kind: CellKind, n_div: usize) -> Result<Mesh, MeshError> {
    if n_div == 0 {
        return Err(MeshError::ZeroDivisions);
    }
    if cell_kind.dim() != dim {
        return Err(MeshError::DimensionMismatch { dim, kind: cell_kind });
    }
    let n = n_div;
    let np = n + 1;
    let inv = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(np.pow(dim as u32));
    if dim == 2 {
        for j in 0..np {
            for i in 0..np {
                vertices.push([i as f64 * inv, j as f64 * inv, 0.0]);
            }
        }
    } else {
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    vertices.push([i as f64 * inv, j as f64 * inv, k as f64 * inv]);
                }
            }
        }
    }

    let v2 = |i: usize, j: usize| i + np * j;
    let v3 = |i: usize, j: usize, k: usize| i + np * (j + np * k);

    let mut cells = Vec::new();
    match cell_kind {
        CellKind::Tri => {
            for j in 0..n {
                for i in 0..n {
                    let (a, b, c, d) = (v2(i, j), v2(i + 1, j), v2(i, j + 1), v2(i + 1, j + 1));
                    // diagonal from (i, j) to (i+1, j+1)
                    cells.extend_from_slice(&[a, b, d]);
                    cells.extend_from_slice(&[a, d, c]);
                }
            }
        }
        CellKind::Quad => {
            for j in 0..n {
                for i in 0..n {
                    cells.extend_from_slice(&[v2(i, j), v2(i + 1, j), v2(i, j + 1), v2(i + 1, j + 1)]);
                }
            }
        }
        CellKind::Hex => {
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        for c in 0..2 {
                            for b in 0..2 {
                                for a in 0..2 {
                                    cells.push(v3(i + a, j + b, k + c));
                                }
                            }
                        }
                    }
                }
            }
        }
        CellKind::Tet => {
            // Kuhn split: one tetrahedron per axis permutation, walking
            // from the cube's low corner to its high corner.
            const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        for perm in PERMS {
                            let mut idx = [i, j, k];
                            let mut tet = [v3(i, j, k), 0, 0, 0];
                            for (step, &axis) in perm.iter().enumerate() {
                                idx[axis] += 1;
                                tet[step + 1] = v3(idx[0], idx[1], idx[2]);
                            }
                            let e = |a: usize| crate::geometry::sub(&vertices[tet[a]], &vertices[tet[0]]);
                            let vol = crate::geometry::dot(&e(1), &crate::geometry::cross(&e(2), &e(3)));
                            if vol < 0.0 {
                                tet.swap(2, 3);
                            }
                            cells.extend_from_slice(&tet);
                        }
                    }
                }
            }
        }
    }

    let mut mesh = Mesh { dim, cell_kind, n_div, vertices, cells, facets: Vec::new(), cell_facets: Vec::new() };
    let (facets, cell_facets) = facets::build_facets(&mesh)?;
    mesh.facets = facets;
    mesh.cell_facets = cell_facets;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges_2d(m: &Mesh) -> usize {
        m.n_facets()
    }

    #[test]
    fn tri_n5_counts() {
        let m = generate_unit_mesh(2, CellKind::Tri, 5).unwrap();
        assert_eq!(m.n_vertices(), 36);
        assert_eq!(m.n_cells(), 50);
        assert_eq!(edges_2d(&m), 85);
        assert_eq!(m.n_vertices() + m.n_cells() - edges_2d(&m), 1);
    }

    #[test]
    fn quad_n5_counts() {
        let m = generate_unit_mesh(2, CellKind::Quad, 5).unwrap();
        assert_eq!(m.n_cells(), 25);
        assert_eq!(edges_2d(&m), 60);
    }

    #[test]
    fn tet_n8_counts() {
        let m = generate_unit_mesh(3, CellKind::Tet, 8).unwrap();
        assert_eq!(m.n_cells(), 3072);
        assert_eq!(m.n_facets(), 6528);
        assert_eq!(m.n_boundary_facets(), 768);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(generate_unit_mesh(2, CellKind::Tri, 0).unwrap_err(), MeshError::ZeroDivisions);
        assert!(matches!(generate_unit_mesh(3, CellKind::Quad, 2), Err(MeshError::DimensionMismatch { .. })));
        assert!(matches!(generate_unit_mesh(2, CellKind::Hex, 2), Err(MeshError::DimensionMismatch { .. })));
    }

    #[test]
    fn closed_form_counts_up_to_16() {
        for n in 1..=16usize {
            for kind in CellKind::ALL {
                if kind.dim() == 3 && n > 10 {
                    continue;
                }
                let m = generate_unit_mesh(kind.dim(), kind, n).unwrap();
                let (cells, facets) = match kind {
                    CellKind::Tri => (2 * n * n, 3 * n * n + 2 * n),
                    CellKind::Quad => (n * n, 2 * n * (n + 1)),
                    CellKind::Tet => (6 * n.pow(3), 12 * n.pow(3) + 6 * n * n),
                    CellKind::Hex => (n.pow(3), 3 * n * n * (n + 1)),
                };
                assert_eq!(m.n_cells(), cells, "{kind} n={n}");
                assert_eq!(m.n_facets(), facets, "{kind} n={n}");
                let bnd = if kind.dim() == 2 {
                    4 * n
                } else if kind == CellKind::Tet {
                    12 * n * n
                } else {
                    6 * n * n
                };
                assert_eq!(m.n_boundary_facets(), bnd, "{kind} n={n}");
            }
        }
    }

    #[test]
    fn text_dump_has_both_blocks() {
        let m = generate_unit_mesh(2, CellKind::Tri, 1).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("vertices 4\n"));
        assert!(s.contains("cells 2 tri\n"));
        assert!(s.ends_with("0 3 2\n"));
    }

    #[test]
    fn parse_cell_kind() {
        assert_eq!("TET".parse::<CellKind>().unwrap(), CellKind::Tet);
        assert!("prism".parse::<CellKind>().is_err());
    }
}
