use crate::geometry::{self, Mat3, Point};

use super::CellKind;

/// Reference-to-physical map of one cell.
///
/// Simplices use the affine map `x = v0 + J ξ`; quadrilaterals and
/// hexahedra use the multilinear map built from the Q1 shape functions.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub kind: CellKind,
    pub vertices: Vec<Point>,
}

/// Values and reference gradients of the multilinear (Q1) shape functions
/// on `[0,1]^dim`, local node `a + 2b + 4c` at `(a, b, c)`.
pub(crate) fn multilinear_shape(dim: usize, xi: &Point, values: &mut [f64], grads: &mut [Point]) {
    let n = 1 << dim;
    for node in 0..n {
        let mut v = 1.0;
        let mut g = [0.0; 3];
        for axis in 0..dim {
            let bit = (node >> axis) & 1;
            v *= if bit == 1 { xi[axis] } else { 1.0 - xi[axis] };
            let mut d = 1.0;
            for other in 0..dim {
                let b = (node >> other) & 1;
                d *= match (other == axis, b) {
                    (true, 1) => 1.0,
                    (true, _) => -1.0,
                    (false, 1) => xi[other],
                    (false, _) => 1.0 - xi[other],
                };
            }
            g[axis] = d;
        }
        values[node] = v;
        grads[node] = g;
    }
}

impl CellGeometry {
    pub fn new(kind: CellKind, vertices: Vec<Point>) -> Self {
        Self { kind, vertices }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn is_affine(&self) -> bool {
        self.kind.is_simplex()
    }

    pub fn map(&self, xi: &Point) -> Point {
        let dim = self.dim();
        if self.kind.is_simplex() {
            let mut x = self.vertices[0];
            for k in 0..dim {
                let e = geometry::sub(&self.vertices[k + 1], &self.vertices[0]);
                x = geometry::add(&x, &geometry::scale(&e, xi[k]));
            }
            x
        } else {
            let mut values = [0.0; 8];
            let mut grads = [[0.0; 3]; 8];
            multilinear_shape(dim, xi, &mut values, &mut grads);
            let mut x = [0.0; 3];
            for (v, &w) in self.vertices.iter().zip(values.iter()) {
                x = geometry::add(&x, &geometry::scale(v, w));
            }
            x
        }
    }

    /// Jacobian `∂x/∂ξ`; for 2D cells the third row/column is the identity.
    pub fn jacobian(&self, xi: &Point) -> Mat3 {
        let dim = self.dim();
        let mut j = [[0.0; 3]; 3];
        if self.kind.is_simplex() {
            for k in 0..dim {
                let e = geometry::sub(&self.vertices[k + 1], &self.vertices[0]);
                for (i, row) in j.iter_mut().enumerate().take(dim) {
                    row[k] = e[i];
                }
            }
        } else {
            let mut values = [0.0; 8];
            let mut grads = [[0.0; 3]; 8];
            multilinear_shape(dim, xi, &mut values, &mut grads);
            for (v, g) in self.vertices.iter().zip(grads.iter()) {
                for (i, row) in j.iter_mut().enumerate().take(dim) {
                    for k in 0..dim {
                        row[k] += v[i] * g[k];
                    }
                }
            }
        }
        if dim == 2 {
            j[2][2] = 1.0;
        }
        j
    }

    pub fn det_jacobian(&self, xi: &Point) -> f64 {
        geometry::det(&self.jacobian(xi))
    }

    /// Smallest Jacobian determinant over the reference vertices; exact for
    /// simplices and sufficient to detect inversion of multilinear cells.
    pub(crate) fn min_vertex_det(&self) -> f64 {
        if self.kind.is_simplex() {
            return self.det_jacobian(&[0.0; 3]);
        }
        let dim = self.dim();
        (0..1usize << dim)
            .map(|node| {
                let xi = [(node & 1) as f64, ((node >> 1) & 1) as f64, ((node >> 2) & 1) as f64];
                self.det_jacobian(&xi)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        let dim = self.dim();
        if self.kind.is_simplex() {
            let fact = if dim == 2 { 2.0 } else { 6.0 };
            return self.det_jacobian(&[0.0; 3]) / fact;
        }
        // two-point Gauss is exact for the multilinear determinant
        let g = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
        let mut vol = 0.0;
        for node in 0..1usize << dim {
            let xi = [g[node & 1], g[(node >> 1) & 1], if dim == 3 { g[(node >> 2) & 1] } else { 0.0 }];
            vol += self.det_jacobian(&xi);
        }
        vol / (1 << dim) as f64
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let mut c = [0.0; 3];
        for v in &self.vertices {
            c = geometry::add(&c, v);
        }
        geometry::scale(&c, 1.0 / n)
    }

    /// Reference coordinates of a physical point (Newton iteration for
    /// multilinear cells, one step for affine ones).
    pub fn inverse_map(&self, x: &Point) -> Point {
        let dim = self.dim();
        let mut xi = if self.kind.is_simplex() { [0.0; 3] } else { [0.5, 0.5, if dim == 3 { 0.5 } else { 0.0 }] };
        let iters = if self.kind.is_simplex() { 1 } else { 20 };
        for _ in 0..iters {
            let r = geometry::sub(x, &self.map(&xi));
            let j = self.jacobian(&xi);
            let jinv = geometry::inverse(&j, geometry::det(&j));
            let d = geometry::mat_vec(&jinv, &r);
            for k in 0..dim {
                xi[k] += d[k];
            }
            if geometry::norm(&d) < 1e-15 {
                break;
            }
        }
        xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_unit_mesh;

    #[test]
    fn single_cell_measures() {
        let tri = generate_unit_mesh(2, CellKind::Tri, 1).unwrap();
        for c in 0..tri.n_cells() {
            assert!((tri.cell_geometry(c).unwrap().volume() - 0.5).abs() < 1e-15);
        }
        let tet = generate_unit_mesh(3, CellKind::Tet, 1).unwrap();
        for c in 0..tet.n_cells() {
            assert!((tet.cell_geometry(c).unwrap().volume() - 1.0 / 6.0).abs() < 1e-15);
        }
        let hex = generate_unit_mesh(3, CellKind::Hex, 4).unwrap();
        for c in 0..hex.n_cells() {
            assert!((hex.cell_geometry(c).unwrap().volume() - 1.0 / 64.0).abs() < 1e-15);
        }
    }

    #[test]
    fn volumes_sum_to_one() {
        for kind in CellKind::ALL {
            for n in [1, 2, 3, 5] {
                let m = generate_unit_mesh(kind.dim(), kind, n).unwrap();
                let total: f64 = (0..m.n_cells()).map(|c| m.cell_geometry(c).unwrap().volume()).sum();
                assert!((total - 1.0).abs() < 1e-12, "{kind} n={n}: {total}");
            }
        }
    }

    #[test]
    fn inverted_cell_is_rejected() {
        let m = generate_unit_mesh(2, CellKind::Tri, 1).unwrap();
        assert!(matches!(m.cell_geometry(7), Err(crate::mesh::MeshError::CellOutOfRange(7))));
        let mut g = m.cell_geometry(0).unwrap();
        g.vertices.swap(1, 2);
        assert!(g.min_vertex_det() < 0.0);
    }

    #[test]
    fn inverse_map_roundtrip() {
        for kind in CellKind::ALL {
            let m = generate_unit_mesh(kind.dim(), kind, 3).unwrap();
            let g = m.cell_geometry(m.n_cells() / 2).unwrap();
            let xi = [0.2, 0.1, if kind.dim() == 3 { 0.3 } else { 0.0 }];
            let back = g.inverse_map(&g.map(&xi));
            for k in 0..3 {
                assert!((back[k] - xi[k]).abs() < 1e-13);
            }
        }
    }
}
