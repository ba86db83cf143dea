use crate::geometry::{self, Point};

use super::{Mesh, MeshError};

/// One side of a facet: the adjacent cell and the facet's local index in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSide {
    pub cell: usize,
    pub local: usize,
}

#[derive(Debug, Clone)]
pub struct FacetRecord {
    /// Vertex indices in the plus cell's local facet order.
    pub vertices: Vec<usize>,
    pub plus: CellSide,
    /// `None` marks a boundary facet.
    pub minus: Option<CellSide>,
    /// Unit normal pointing out of the plus cell.
    pub normal: Point,
    /// Length (2D) or area (3D).
    pub measure: f64,
}

impl FacetRecord {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    pub fn centroid(&self, mesh: &Mesh) -> Point {
        let mut c = [0.0; 3];
        for &v in &self.vertices {
            c = geometry::add(&c, mesh.vertex(v));
        }
        geometry::scale(&c, 1.0 / self.vertices.len() as f64)
    }

    /// Which side of the unit box a boundary facet lies on, numbered
    /// `2 * axis + (0 for the low face, 1 for the high face)`.
    pub fn box_side(&self, mesh: &Mesh) -> Option<usize> {
        if !self.is_boundary() {
            return None;
        }
        let axis = (0..mesh.dim()).max_by(|&a, &b| self.normal[a].abs().total_cmp(&self.normal[b].abs()))?;
        Some(2 * axis + usize::from(self.normal[axis] > 0.0))
    }
}

/// Facet records of a mesh, sorted lexicographically by vertex set.
pub fn facet_adjacency(mesh: &Mesh) -> Vec<FacetRecord> {
    mesh.facets().to_vec()
}

pub(super) fn build_facets(mesh: &Mesh) -> Result<(Vec<FacetRecord>, Vec<usize>), MeshError> {
    let kind = mesh.cell_kind();
    let local = kind.facet_vertices();
    let nf = kind.n_facets();
    let mut entries: Vec<([usize; 4], usize, usize)> = Vec::with_capacity(mesh.n_cells() * nf);
    for c in 0..mesh.n_cells() {
        let verts = mesh.cell(c);
        for (lf, fv) in local.iter().enumerate() {
            let mut key = [usize::MAX; 4];
            for (k, &lv) in fv.iter().enumerate() {
                key[k] = verts[lv];
            }
            key[..fv.len()].sort_unstable();
            entries.push((key, c, lf));
        }
    }
    entries.sort_unstable();

    let mut facets = Vec::new();
    let mut cell_facets = vec![usize::MAX; mesh.n_cells() * nf];
    let mut i = 0;
    while i < entries.len() {
        let mut j = i + 1;
        while j < entries.len() && entries[j].0 == entries[i].0 {
            j += 1;
        }
        if j - i > 2 {
            return Err(MeshError::NonManifoldFacet(j - i));
        }
        let (_, pc, pl) = entries[i];
        let minus = (j - i == 2).then(|| CellSide { cell: entries[i + 1].1, local: entries[i + 1].2 });
        let id = facets.len();
        cell_facets[pc * nf + pl] = id;
        if let Some(m) = minus {
            cell_facets[m.cell * nf + m.local] = id;
        }
        let vertices: Vec<usize> = local[pl].iter().map(|&lv| mesh.cell(pc)[lv]).collect();
        let (normal, measure) = facet_normal(mesh, &vertices, pc);
        facets.push(FacetRecord { vertices, plus: CellSide { cell: pc, local: pl }, minus, normal, measure });
        i = j;
    }
    Ok((facets, cell_facets))
}

fn facet_normal(mesh: &Mesh, vertices: &[usize], plus_cell: usize) -> (Point, f64) {
    let p = |k: usize| *mesh.vertex(vertices[k]);
    let (raw, measure) = if mesh.dim() == 2 {
        let t = geometry::sub(&p(1), &p(0));
        let len = geometry::norm(&t);
        ([t[1], -t[0], 0.0], len)
    } else {
        let c = geometry::cross(&geometry::sub(&p(1), &p(0)), &geometry::sub(&p(2), &p(0)));
        let area = geometry::norm(&c);
        // triangles span half the parallelogram; planar quads in tensor order span all of it
        (c, if vertices.len() == 3 { 0.5 * area } else { area })
    };
    let mut n = geometry::scale(&raw, 1.0 / geometry::norm(&raw));
    let cell_centroid = mesh.cell_geometry_unchecked(plus_cell).centroid();
    let mut fc = [0.0; 3];
    for k in 0..vertices.len() {
        fc = geometry::add(&fc, &p(k));
    }
    fc = geometry::scale(&fc, 1.0 / vertices.len() as f64);
    if geometry::dot(&n, &geometry::sub(&fc, &cell_centroid)) < 0.0 {
        n = geometry::scale(&n, -1.0);
    }
    (n, measure)
}
