//! Element-level integrals shared by the three formulations.

use crate::elements::{nodal_shape, piola, rt_shape, QuadratureRule};
use crate::geometry::{self, Point};
use crate::mesh::{CellGeometry, CellKind};

/// Small dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }
}

/// Physical values and gradients of the nodal basis at one point.
pub(crate) struct NodalPoint {
    pub values: [f64; 8],
    pub grads: [Point; 8],
    pub det: f64,
}

pub(crate) fn nodal_at(geom: &CellGeometry, xi: &Point) -> NodalPoint {
    let mut values = [0.0; 8];
    let mut ref_grads = [[0.0; 3]; 8];
    nodal_shape(geom.kind, xi, &mut values, &mut ref_grads);
    let jac = geom.jacobian(xi);
    let det = geometry::det(&jac);
    let jinv = geometry::inverse(&jac, det);
    let mut grads = [[0.0; 3]; 8];
    for a in 0..geom.kind.n_vertices() {
        grads[a] = geometry::mat_t_vec(&jinv, &ref_grads[a]);
    }
    NodalPoint { values, grads, det }
}

/// Cell integrals of the equal-order nodal discretization. Vector DoFs are
/// numbered `node * dim + component`.
pub(crate) struct NodalCell {
    /// `∫ φ_a φ_b`
    pub mass: Dense,
    /// `∫ ∇φ_a · ∇φ_b`
    pub stiffness: Dense,
    /// `∫ ∂_c φ_a φ_b`, rows are vector DoFs
    pub div: Dense,
    /// `∫ φ_a ∂_c φ_b`, rows are vector DoFs
    pub grad: Dense,
    /// `∫ φ_a g_c` for the body force `g`
    pub load_u: Vec<f64>,
    /// `∫ ∇φ_a · g`
    pub load_grad: Vec<f64>,
}

pub(crate) fn nodal_cell(geom: &CellGeometry, rule: &QuadratureRule, body: &Point) -> NodalCell {
    let dim = geom.dim();
    let nv = geom.kind.n_vertices();
    let mut cell = NodalCell {
        mass: Dense::zeros(nv, nv),
        stiffness: Dense::zeros(nv, nv),
        div: Dense::zeros(nv * dim, nv),
        grad: Dense::zeros(nv * dim, nv),
        load_u: vec![0.0; nv * dim],
        load_grad: vec![0.0; nv],
    };
    for (xi, w) in rule.iter() {
        let p = nodal_at(geom, xi);
        let wq = w * p.det;
        for a in 0..nv {
            for b in 0..nv {
                cell.mass.add(a, b, wq * p.values[a] * p.values[b]);
                cell.stiffness.add(a, b, wq * geometry::dot(&p.grads[a], &p.grads[b]));
                for c in 0..dim {
                    cell.div.add(a * dim + c, b, wq * p.grads[a][c] * p.values[b]);
                    cell.grad.add(a * dim + c, b, wq * p.values[a] * p.grads[b][c]);
                }
            }
            for c in 0..dim {
                cell.load_u[a * dim + c] += wq * p.values[a] * body[c];
            }
            cell.load_grad[a] += wq * geometry::dot(&p.grads[a], body);
        }
    }
    cell
}

/// Physical RT values (with global orientation signs) and divergences.
pub(crate) fn rt_at(geom: &CellGeometry, xi: &Point, signs: &[f64]) -> ([Point; 6], [f64; 6], f64) {
    let mut ref_values = [[0.0; 3]; 6];
    let mut ref_divs = [0.0; 6];
    rt_shape(geom.kind, xi, &mut ref_values, &mut ref_divs);
    let jac = geom.jacobian(xi);
    let det = geometry::det(&jac);
    let mut values = [[0.0; 3]; 6];
    let mut divs = [0.0; 6];
    for i in 0..geom.kind.n_facets() {
        values[i] = geometry::scale(&piola(&jac, det, &ref_values[i]), signs[i]);
        divs[i] = signs[i] * ref_divs[i] / det;
    }
    (values, divs, det)
}

pub(crate) struct HdivCell {
    /// `∫ φ_i · φ_j`
    pub mass: Dense,
    /// `∫ div φ_i`
    pub div: Vec<f64>,
    /// `∫ φ_i · g`
    pub load: Vec<f64>,
    pub volume: f64,
}

pub(crate) fn hdiv_cell(geom: &CellGeometry, rule: &QuadratureRule, signs: &[f64], body: &Point) -> HdivCell {
    let nf = geom.kind.n_facets();
    let mut cell = HdivCell { mass: Dense::zeros(nf, nf), div: vec![0.0; nf], load: vec![0.0; nf], volume: 0.0 };
    for (xi, w) in rule.iter() {
        let (values, divs, det) = rt_at(geom, xi, signs);
        let wq = w * det;
        cell.volume += wq;
        for i in 0..nf {
            for j in 0..nf {
                cell.mass.add(i, j, wq * geometry::dot(&values[i], &values[j]));
            }
            cell.div[i] += wq * divs[i];
            cell.load[i] += wq * geometry::dot(&values[i], body);
        }
    }
    cell
}

/// Nodal basis values of a cell at a physical point on its boundary.
pub(crate) fn nodal_trace(geom: &CellGeometry, x: &Point) -> [f64; 8] {
    let xi = clamp_reference(geom.kind, geom.inverse_map(x));
    let mut values = [0.0; 8];
    let mut grads = [[0.0; 3]; 8];
    nodal_shape(geom.kind, &xi, &mut values, &mut grads);
    values
}

/// Project round-off excursions of an inverse-mapped point back onto the
/// reference cell.
pub(crate) fn clamp_reference(kind: CellKind, mut xi: Point) -> Point {
    for c in xi.iter_mut().take(kind.dim()) {
        *c = c.clamp(0.0, 1.0);
    }
    if kind.dim() == 2 {
        xi[2] = 0.0;
    }
    xi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::quadrature_rule;
    use crate::mesh::generate_unit_mesh;

    #[test]
    fn single_triangle_rt_mass_trace() {
        // reference triangle: φ_0 = (x, y), φ_1 = (x - 1, y), φ_2 = (x, y - 1)
        // ∫ |φ_i|² in closed form: 1/6, 1/3, 1/3 (monomials x², y², x, y)
        let mesh = generate_unit_mesh(2, CellKind::Tri, 1).unwrap();
        let geom = mesh.cell_geometry(0).unwrap();
        let rule = quadrature_rule(CellKind::Tri, 2).unwrap();
        let cell = hdiv_cell(&geom, &rule, &[1.0; 3], &[0.0; 3]);
        // cell 0 = [v00, v10, v11]: affine image, so compare with direct quadrature
        let xy = |x: f64, y: f64| [x, y, 0.0];
        let mut trace = 0.0;
        let v = &geom.vertices;
        let area = geom.volume();
        for (xi, w) in rule.iter() {
            let x = geom.map(xi);
            for i in 0..3 {
                let p = v[i];
                let phi = geometry::scale(&geometry::sub(&x, &p), 1.0 / (2.0 * area));
                trace += w * 2.0 * area * geometry::dot(&phi, &phi);
            }
        }
        let diag: f64 = (0..3).map(|i| cell.mass.at(i, i)).sum();
        assert!((diag - trace).abs() < 1e-14);
        let _ = xy;
        // closed form on the reference triangle for comparison
        let ref_geom = CellGeometry::new(CellKind::Tri, crate::elements::reference_vertices(CellKind::Tri));
        let ref_cell = hdiv_cell(&ref_geom, &rule, &[1.0; 3], &[0.0; 3]);
        let expect = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0];
        for i in 0..3 {
            assert!((ref_cell.mass.at(i, i) - expect[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn nodal_integrals_are_consistent() {
        for kind in CellKind::ALL {
            let mesh = generate_unit_mesh(kind.dim(), kind, 2).unwrap();
            let geom = mesh.cell_geometry(1).unwrap();
            let rule = quadrature_rule(kind, 2).unwrap();
            let cell = nodal_cell(&geom, &rule, &[0.0; 3]);
            let nv = kind.n_vertices();
            let total: f64 = cell.mass.data.iter().sum();
            assert!((total - geom.volume()).abs() < 1e-14);
            // stiffness rows annihilate constants
            for a in 0..nv {
                let s: f64 = (0..nv).map(|b| cell.stiffness.at(a, b)).sum();
                assert!(s.abs() < 1e-13);
            }
            // ∫ ∂_c(φ_a φ_b) = boundary term, so div + grad is the transpose pairing
            for a in 0..nv {
                for b in 0..nv {
                    for c in 0..kind.dim() {
                        let lhs = cell.div.at(a * kind.dim() + c, b);
                        let rhs = cell.grad.at(b * kind.dim() + c, a);
                        assert!((lhs - rhs).abs() < 1e-14);
                    }
                }
            }
        }
    }
}
