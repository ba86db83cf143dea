//! Lowest-order reference elements: P1/Q1 nodal shape functions, the
//! Raviart-Thomas type facet elements on each cell shape, the contravariant
//! Piola map and global DoF counts for the three formulations.
//!
//! Reference cells are the unit simplex (vertices at the origin and the
//! unit axis points) and `[0,1]^d`. RT basis function `i` belongs to local
//! facet `i` and has unit outward flux through it.

mod quadrature;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Mat3, Point};
use crate::mesh::{CellGeometry, CellKind, Mesh};

pub use quadrature::{facet_quadrature, gauss_legendre, quadrature_rule, QuadratureRule, MAX_DEGREE};

const REF_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("point {point:?} lies outside the reference {kind}")]
    OutsideReference { kind: CellKind, point: Point },
    #[error("no quadrature of degree {degree} on {kind} (max {MAX_DEGREE})")]
    UnsupportedDegree { kind: CellKind, degree: usize },
    #[error("unsupported facet with {n_vertices} vertices in {dim}D")]
    UnsupportedFacet { dim: usize, n_vertices: usize },
    #[error("element family {family:?} is not defined on {kind}")]
    Incompatible { family: ElementFamily, kind: CellKind },
    #[error("singular geometry (Jacobian determinant {det:e})")]
    SingularGeometry { det: f64 },
    #[error("unknown formulation `{0}`")]
    UnknownFormulation(String),
}

/// Where the degrees of freedom of a family live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofLayout {
    Vertex,
    Cell,
    Facet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueRank {
    Scalar,
    Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementFamily {
    P1,
    Q1,
    /// Piecewise constants (DP0 on simplices, DQ0 on tensor cells).
    Dp0,
    RtTri,
    RtQuad,
    RtTet,
    RtHex,
}

impl ElementFamily {
    pub fn layout(self) -> DofLayout {
        match self {
            ElementFamily::P1 | ElementFamily::Q1 => DofLayout::Vertex,
            ElementFamily::Dp0 => DofLayout::Cell,
            _ => DofLayout::Facet,
        }
    }

    pub fn rank(self) -> ValueRank {
        match self.layout() {
            DofLayout::Facet => ValueRank::Vector,
            _ => ValueRank::Scalar,
        }
    }

    pub fn supports(self, kind: CellKind) -> bool {
        match self {
            ElementFamily::P1 => kind.is_simplex(),
            ElementFamily::Q1 => !kind.is_simplex(),
            ElementFamily::Dp0 => true,
            ElementFamily::RtTri => kind == CellKind::Tri,
            ElementFamily::RtQuad => kind == CellKind::Quad,
            ElementFamily::RtTet => kind == CellKind::Tet,
            ElementFamily::RtHex => kind == CellKind::Hex,
        }
    }

    /// Nodal (continuous/discontinuous Galerkin) family for a cell shape.
    pub fn nodal(kind: CellKind) -> Self {
        if kind.is_simplex() {
            ElementFamily::P1
        } else {
            ElementFamily::Q1
        }
    }

    pub fn raviart_thomas(kind: CellKind) -> Self {
        match kind {
            CellKind::Tri => ElementFamily::RtTri,
            CellKind::Quad => ElementFamily::RtQuad,
            CellKind::Tet => ElementFamily::RtTet,
            CellKind::Hex => ElementFamily::RtHex,
        }
    }

    pub fn local_dofs(self, kind: CellKind) -> usize {
        match self.layout() {
            DofLayout::Vertex => kind.n_vertices(),
            DofLayout::Cell => 1,
            DofLayout::Facet => kind.n_facets(),
        }
    }
}

/// Basis values at one reference point.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisValues {
    Scalar { values: Vec<f64>, grads: Vec<Point> },
    Vector { values: Vec<Point>, divs: Vec<f64> },
}

pub fn reference_vertices(kind: CellKind) -> Vec<Point> {
    match kind {
        CellKind::Tri => vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        CellKind::Tet => vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        CellKind::Quad | CellKind::Hex => {
            (0..kind.n_vertices()).map(|n| [(n & 1) as f64, ((n >> 1) & 1) as f64, ((n >> 2) & 1) as f64]).collect()
        }
    }
}

pub fn inside_reference(kind: CellKind, xi: &Point) -> bool {
    let dim = kind.dim();
    let coords = &xi[..dim];
    if coords.iter().any(|&c| c < -REF_TOL) {
        return false;
    }
    if kind.is_simplex() {
        coords.iter().sum::<f64>() <= 1.0 + REF_TOL
    } else {
        coords.iter().all(|&c| c <= 1.0 + REF_TOL)
    }
}

/// Evaluate every basis function of `family` at a reference point.
pub fn eval_basis(family: ElementFamily, kind: CellKind, xi: &Point) -> Result<BasisValues, ElementError> {
    if !family.supports(kind) {
        return Err(ElementError::Incompatible { family, kind });
    }
    if !inside_reference(kind, xi) {
        return Err(ElementError::OutsideReference { kind, point: *xi });
    }
    let n = family.local_dofs(kind);
    Ok(match family.rank() {
        ValueRank::Scalar => {
            let mut values = vec![0.0; n];
            let mut grads = vec![[0.0; 3]; n];
            if family == ElementFamily::Dp0 {
                values[0] = 1.0;
            } else {
                nodal_shape(kind, xi, &mut values, &mut grads);
            }
            BasisValues::Scalar { values, grads }
        }
        ValueRank::Vector => {
            let mut values = vec![[0.0; 3]; n];
            let mut divs = vec![0.0; n];
            rt_shape(kind, xi, &mut values, &mut divs);
            BasisValues::Vector { values, divs }
        }
    })
}

/// P1/Q1 values and reference gradients without range checks.
pub(crate) fn nodal_shape(kind: CellKind, xi: &Point, values: &mut [f64], grads: &mut [Point]) {
    if kind.is_simplex() {
        let dim = kind.dim();
        values[0] = 1.0 - xi[..dim].iter().sum::<f64>();
        grads[0] = [-1.0, -1.0, if dim == 3 { -1.0 } else { 0.0 }];
        for k in 0..dim {
            values[k + 1] = xi[k];
            grads[k + 1] = [0.0; 3];
            grads[k + 1][k] = 1.0;
        }
    } else {
        crate::mesh::multilinear_shape(kind.dim(), xi, values, grads);
    }
}

/// Reference RT values and divergences without range checks.
pub(crate) fn rt_shape(kind: CellKind, xi: &Point, values: &mut [Point], divs: &mut [f64]) {
    let dim = kind.dim();
    if kind.is_simplex() {
        // φ_i = (ξ - p_i) / (d |K̂|)
        let scale = 1.0 / (dim as f64 * kind.reference_measure());
        let verts = reference_vertices(kind);
        for (i, p) in verts.iter().enumerate() {
            let mut v = geometry::scale(&geometry::sub(xi, p), scale);
            if dim == 2 {
                v[2] = 0.0;
            }
            values[i] = v;
            divs[i] = dim as f64 * scale;
        }
    } else {
        for axis in 0..dim {
            let mut low = [0.0; 3];
            low[axis] = xi[axis] - 1.0;
            let mut high = [0.0; 3];
            high[axis] = xi[axis];
            values[2 * axis] = low;
            values[2 * axis + 1] = high;
            divs[2 * axis] = 1.0;
            divs[2 * axis + 1] = 1.0;
        }
    }
}

/// Contravariant Piola transform `v = J v̂ / det J`, `div v = div̂ v̂ / det J`.
#[inline]
pub(crate) fn piola(jac: &Mat3, det: f64, value: &Point) -> Point {
    geometry::scale(&geometry::mat_vec(jac, value), 1.0 / det)
}

/// Push reference vector values and divergences at `xi` forward to the
/// physical cell.
pub fn piola_map(
    cell: &CellGeometry,
    xi: &Point,
    ref_values: &[Point],
    ref_divs: &[f64],
) -> Result<(Vec<Point>, Vec<f64>), ElementError> {
    let jac = cell.jacobian(xi);
    let det = geometry::det(&jac);
    if !(det > 0.0) {
        return Err(ElementError::SingularGeometry { det });
    }
    let values = ref_values.iter().map(|v| piola(&jac, det, v)).collect();
    let divs = ref_divs.iter().map(|d| d / det).collect();
    Ok((values, divs))
}

/// Orientation of an RT DoF seen from a cell: `+1` when the cell is the
/// facet's plus side (flux along the stored normal), `-1` otherwise.
pub fn facet_sign(mesh: &Mesh, cell: usize, local: usize) -> f64 {
    let f = &mesh.facets()[mesh.cell_facets(cell)[local]];
    if f.plus.cell == cell {
        1.0
    } else {
        -1.0
    }
}

/// The three discretizations of the four-field model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Hdiv,
    CgVms,
    DgVms,
}

impl Formulation {
    pub const ALL: [Formulation; 3] = [Formulation::Hdiv, Formulation::CgVms, Formulation::DgVms];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Hdiv => "hdiv",
            Formulation::CgVms => "cgvms",
            Formulation::DgVms => "dgvms",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = ElementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "hdiv" => Ok(Formulation::Hdiv),
            "cgvms" => Ok(Formulation::CgVms),
            "dgvms" => Ok(Formulation::DgVms),
            _ => Err(ElementError::UnknownFormulation(s.to_string())),
        }
    }
}

/// Total number of unknowns over both networks and both field types.
pub fn dof_count(formulation: Formulation, mesh: &Mesh) -> usize {
    let fields_per_node = 2 * mesh.dim() + 2;
    match formulation {
        Formulation::Hdiv => 2 * (mesh.n_facets() + mesh.n_cells()),
        Formulation::CgVms => fields_per_node * mesh.n_vertices(),
        Formulation::DgVms => fields_per_node * mesh.cell_kind().n_vertices() * mesh.n_cells(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_unit_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ref_point(kind: CellKind, rng: &mut ChaCha8Rng) -> Point {
        loop {
            let mut p = [0.0; 3];
            for c in p.iter_mut().take(kind.dim()) {
                *c = rng.random::<f64>();
            }
            if inside_reference(kind, &p) {
                return p;
            }
        }
    }

    // reference facets with outward unit normals
    fn reference_facets(kind: CellKind) -> Vec<(Vec<Point>, Point)> {
        let verts = reference_vertices(kind);
        let centroid = {
            let mut c = [0.0; 3];
            for v in &verts {
                c = geometry::add(&c, v);
            }
            geometry::scale(&c, 1.0 / verts.len() as f64)
        };
        kind.facet_vertices()
            .iter()
            .map(|fv| {
                let pts: Vec<Point> = fv.iter().map(|&i| verts[i]).collect();
                let raw = if kind.dim() == 2 {
                    let t = geometry::sub(&pts[1], &pts[0]);
                    [t[1], -t[0], 0.0]
                } else {
                    geometry::cross(&geometry::sub(&pts[1], &pts[0]), &geometry::sub(&pts[2], &pts[0]))
                };
                let mut n = geometry::scale(&raw, 1.0 / geometry::norm(&raw));
                if geometry::dot(&n, &geometry::sub(&pts[0], &centroid)) < 0.0 {
                    n = geometry::scale(&n, -1.0);
                }
                (pts, n)
            })
            .collect()
    }

    fn vector_values(b: BasisValues) -> (Vec<Point>, Vec<f64>) {
        match b {
            BasisValues::Vector { values, divs } => (values, divs),
            BasisValues::Scalar { .. } => panic!("expected vector basis"),
        }
    }

    #[test]
    fn p1_barycenter_and_q1_vertices() {
        let BasisValues::Scalar { values, .. } =
            eval_basis(ElementFamily::P1, CellKind::Tri, &[1.0 / 3.0, 1.0 / 3.0, 0.0]).unwrap()
        else {
            panic!()
        };
        for v in values {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        for (k, x) in reference_vertices(CellKind::Quad).iter().enumerate() {
            let BasisValues::Scalar { values, .. } = eval_basis(ElementFamily::Q1, CellKind::Quad, x).unwrap() else {
                panic!()
            };
            for (i, v) in values.iter().enumerate() {
                assert_eq!(*v, if i == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn partition_of_unity_and_gradient_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in CellKind::ALL {
            for _ in 0..20 {
                let xi = random_ref_point(kind, &mut rng);
                let BasisValues::Scalar { values, grads } = eval_basis(ElementFamily::nodal(kind), kind, &xi).unwrap()
                else {
                    panic!()
                };
                assert!((values.iter().sum::<f64>() - 1.0).abs() < 1e-13);
                for axis in 0..3 {
                    assert!(grads.iter().map(|g| g[axis]).sum::<f64>().abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn outside_point_and_incompatible_family() {
        assert!(matches!(
            eval_basis(ElementFamily::P1, CellKind::Tri, &[0.7, 0.7, 0.0]),
            Err(ElementError::OutsideReference { .. })
        ));
        assert!(eval_basis(ElementFamily::Q1, CellKind::Quad, &[1.0 + 1e-13, 0.0, 0.0]).is_ok());
        assert!(matches!(
            eval_basis(ElementFamily::RtQuad, CellKind::Tri, &[0.1, 0.1, 0.0]),
            Err(ElementError::Incompatible { .. })
        ));
    }

    #[test]
    fn rt_facet_flux_is_kronecker() {
        for kind in CellKind::ALL {
            let family = ElementFamily::raviart_thomas(kind);
            for (j, (pts, n)) in reference_facets(kind).iter().enumerate() {
                let rule = facet_quadrature(pts, kind.dim(), 2).unwrap();
                let mut flux = vec![0.0; kind.n_facets()];
                for (x, w) in &rule {
                    let (values, _) = vector_values(eval_basis(family, kind, x).unwrap());
                    for (i, v) in values.iter().enumerate() {
                        flux[i] += w * geometry::dot(v, n);
                    }
                }
                for (i, f) in flux.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((f - expect).abs() < 1e-12, "{kind} facet {j} basis {i}: {f}");
                }
            }
        }
    }

    #[test]
    fn rt_divergence_matches_boundary_flux() {
        // ∫ div φ_i over K̂ equals the total outward flux, which is 1
        for kind in CellKind::ALL {
            let family = ElementFamily::raviart_thomas(kind);
            let rule = quadrature_rule(kind, 2).unwrap();
            let mut integral = vec![0.0; kind.n_facets()];
            for (x, w) in rule.iter() {
                let (_, divs) = vector_values(eval_basis(family, kind, x).unwrap());
                for (i, d) in divs.iter().enumerate() {
                    integral[i] += w * d;
                }
            }
            for v in integral {
                assert!((v - 1.0).abs() < 1e-13, "{kind}");
            }
        }
        let (_, divs) = vector_values(eval_basis(ElementFamily::RtTri, CellKind::Tri, &[0.2, 0.2, 0.0]).unwrap());
        assert_eq!(divs, vec![2.0; 3]);
    }

    #[test]
    fn rt_tri_span() {
        // every member has the form (a + b x, c + b y)
        let (at0, _) = vector_values(eval_basis(ElementFamily::RtTri, CellKind::Tri, &[0.0, 0.0, 0.0]).unwrap());
        let (at1, _) = vector_values(eval_basis(ElementFamily::RtTri, CellKind::Tri, &[0.3, 0.6, 0.0]).unwrap());
        for (a, b) in at0.iter().zip(at1.iter()) {
            let bx = (b[0] - a[0]) / 0.3;
            let by = (b[1] - a[1]) / 0.6;
            assert!((bx - by).abs() < 1e-14);
        }
    }

    #[test]
    fn piola_identity_geometry() {
        for kind in CellKind::ALL {
            let cell = CellGeometry::new(kind, reference_vertices(kind));
            let xi = [0.2, 0.3, if kind.dim() == 3 { 0.1 } else { 0.0 }];
            let (values, divs) = vector_values(eval_basis(ElementFamily::raviart_thomas(kind), kind, &xi).unwrap());
            let (pv, pd) = piola_map(&cell, &xi, &values, &divs).unwrap();
            for (p, v) in pv.iter().zip(&values) {
                assert!(geometry::norm(&geometry::sub(p, v)) < 1e-15);
            }
            for (p, d) in pd.iter().zip(&divs) {
                assert!((p - d).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn piola_scaled_cell_divergence_theorem() {
        for kind in CellKind::ALL {
            let s = 0.25;
            let verts: Vec<Point> = reference_vertices(kind)
                .iter()
                .map(|v| geometry::add(&geometry::scale(v, s), &[0.5, 0.25, 0.0]))
                .collect();
            let cell = CellGeometry::new(kind, verts);
            let family = ElementFamily::raviart_thomas(kind);
            let rule = quadrature_rule(kind, 2).unwrap();
            let mut div_integral = vec![0.0; kind.n_facets()];
            for (xi, w) in rule.iter() {
                let (v, d) = vector_values(eval_basis(family, kind, xi).unwrap());
                let (_, pd) = piola_map(&cell, xi, &v, &d).unwrap();
                let det = cell.det_jacobian(xi);
                for (i, dv) in pd.iter().enumerate() {
                    div_integral[i] += w * det * dv;
                    assert!((dv - d[i] / s.powi(kind.dim() as i32)).abs() < 1e-12);
                }
            }
            // boundary flux on the physical cell
            let mut flux = vec![0.0; kind.n_facets()];
            for (pts, n) in reference_facets(kind) {
                let phys: Vec<Point> = pts.iter().map(|p| cell.map(p)).collect();
                for (x, w) in facet_quadrature(&phys, kind.dim(), 2).unwrap() {
                    let xi = cell.inverse_map(&x);
                    let (v, d) = vector_values(eval_basis(family, kind, &xi).unwrap());
                    let (pv, _) = piola_map(&cell, &xi, &v, &d).unwrap();
                    for (i, val) in pv.iter().enumerate() {
                        flux[i] += w * geometry::dot(val, &n);
                    }
                }
            }
            for i in 0..kind.n_facets() {
                assert!((div_integral[i] - flux[i]).abs() < 1e-12, "{kind}");
                assert!((flux[i] - 1.0).abs() < 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn singular_geometry_is_rejected() {
        let cell = CellGeometry::new(CellKind::Tri, vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        assert!(matches!(
            piola_map(&cell, &[0.1, 0.1, 0.0], &[[1.0, 0.0, 0.0]], &[1.0]),
            Err(ElementError::SingularGeometry { .. })
        ));
    }

    #[test]
    fn normal_traces_agree_across_interior_facets() {
        for kind in CellKind::ALL {
            let mesh = generate_unit_mesh(kind.dim(), kind, 2).unwrap();
            let family = ElementFamily::raviart_thomas(kind);
            for (_, f) in mesh.interior_facets() {
                let pts: Vec<Point> = f.vertices.iter().map(|&v| *mesh.vertex(v)).collect();
                let minus = f.minus.unwrap();
                let mut flux = [0.0; 2];
                for (x, w) in facet_quadrature(&pts, kind.dim(), 2).unwrap() {
                    for (k, side) in [f.plus, minus].iter().enumerate() {
                        let cell = mesh.cell_geometry(side.cell).unwrap();
                        let xi = cell.inverse_map(&x);
                        let (v, d) = vector_values(eval_basis(family, kind, &xi).unwrap());
                        let (pv, _) = piola_map(&cell, &xi, &v, &d).unwrap();
                        let sign = facet_sign(&mesh, side.cell, side.local);
                        let trace = sign * geometry::dot(&pv[side.local], &f.normal);
                        // pointwise agreement on the shared facet
                        if k == 1 {
                            let other = mesh.cell_geometry(f.plus.cell).unwrap();
                            let oxi = other.inverse_map(&x);
                            let (ov, od) = vector_values(eval_basis(family, kind, &oxi).unwrap());
                            let (opv, _) = piola_map(&other, &oxi, &ov, &od).unwrap();
                            let otrace = geometry::dot(&opv[f.plus.local], &f.normal);
                            assert!((trace - otrace).abs() < 1e-12, "{kind}");
                        }
                        flux[k] += w * trace;
                    }
                }
                assert!((flux[0] - 1.0).abs() < 1e-12 && (flux[1] - 1.0).abs() < 1e-12, "{kind}: {flux:?}");
            }
        }
    }

    #[test]
    fn interpolated_constant_field_is_divergence_free() {
        for kind in CellKind::ALL {
            let family = ElementFamily::raviart_thomas(kind);
            let c = [0.3, -1.2, 0.7];
            // DoF j is the flux of the field through reference facet j
            let coeffs: Vec<f64> = reference_facets(kind)
                .iter()
                .map(|(pts, n)| {
                    facet_quadrature(pts, kind.dim(), 1).unwrap().iter().map(|(_, w)| w * geometry::dot(&c, n)).sum()
                })
                .collect();
            let (values, divs) = vector_values(eval_basis(family, kind, &[0.1, 0.2, 0.0]).unwrap());
            let div: f64 = coeffs.iter().zip(divs.iter()).map(|(a, d)| a * d).sum();
            assert!(div.abs() < 1e-12, "{kind}");
            for axis in 0..kind.dim() {
                let v: f64 = coeffs.iter().zip(values.iter()).map(|(a, b)| a * b[axis]).sum();
                assert!((v - c[axis]).abs() < 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn dof_counts_match_tables() {
        let two_d = [
            (Formulation::CgVms, CellKind::Tri, [216, 726, 2646, 10086, 39366, 155526]),
            (Formulation::CgVms, CellKind::Quad, [216, 726, 2646, 10086, 39366, 155526]),
            (Formulation::DgVms, CellKind::Tri, [900, 3600, 14400, 57600, 230400, 921600]),
            (Formulation::DgVms, CellKind::Quad, [600, 2400, 9600, 38400, 153600, 614400]),
            (Formulation::Hdiv, CellKind::Tri, [270, 1040, 4080, 16160, 64320, 256640]),
            (Formulation::Hdiv, CellKind::Quad, [170, 640, 2480, 9760, 38720, 154240]),
        ];
        for (form, kind, expected) in two_d {
            for (n, e) in [5, 10, 20, 40, 80, 160].into_iter().zip(expected) {
                let mesh = generate_unit_mesh(2, kind, n).unwrap();
                assert_eq!(dof_count(form, &mesh), e, "{form} {kind} n={n}");
            }
        }
        let mesh = generate_unit_mesh(3, CellKind::Hex, 13).unwrap();
        assert_eq!(dof_count(Formulation::Hdiv, &mesh), 18590);
        let mesh = generate_unit_mesh(3, CellKind::Tet, 5).unwrap();
        assert_eq!(dof_count(Formulation::DgVms, &mesh), 24000);
    }

    #[test]
    fn formulation_parsing() {
        assert_eq!("CG-VMS".parse::<Formulation>().unwrap(), Formulation::CgVms);
        assert_eq!("hdiv".parse::<Formulation>().unwrap(), Formulation::Hdiv);
        assert!("bdm".parse::<Formulation>().is_err());
    }
}
