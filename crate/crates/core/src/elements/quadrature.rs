use crate::geometry::{self, Point};
use crate::mesh::CellKind;

use super::ElementError;

/// Highest polynomial degree for which rules are generated.
pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn points_for_degree(degree: usize) -> usize {
    (degree + 2).div_ceil(2).max(1)
}

/// Quadrature rule on the reference cell exact for polynomials of total
/// degree `degree` (per-axis degree for QUAD/HEX).
pub fn quadrature_rule(kind: CellKind, degree: usize) -> Result<QuadratureRule, ElementError> {
    if degree > MAX_DEGREE {
        return Err(ElementError::UnsupportedDegree { kind, degree });
    }
    let (points, weights) = match kind {
        CellKind::Tri => match degree {
            0 | 1 => (vec![[1.0 / 3.0, 1.0 / 3.0, 0.0]], vec![0.5]),
            2 => (
                vec![[1.0 / 6.0, 1.0 / 6.0, 0.0], [2.0 / 3.0, 1.0 / 6.0, 0.0], [1.0 / 6.0, 2.0 / 3.0, 0.0]],
                vec![1.0 / 6.0; 3],
            ),
            _ => collapsed_triangle(degree),
        },
        CellKind::Tet => match degree {
            0 | 1 => (vec![[0.25, 0.25, 0.25]], vec![1.0 / 6.0]),
            2 => {
                let a = 0.585_410_196_624_968_5;
                let b = 0.138_196_601_125_010_5;
                (vec![[b, b, b], [a, b, b], [b, a, b], [b, b, a]], vec![1.0 / 24.0; 4])
            }
            _ => collapsed_tetrahedron(degree),
        },
        CellKind::Quad | CellKind::Hex => {
            let n = (degree + 1).div_ceil(2).max(1);
            let (x, w) = gauss_legendre(n);
            let mut points = Vec::new();
            let mut weights = Vec::new();
            if kind == CellKind::Quad {
                for j in 0..n {
                    for i in 0..n {
                        points.push([x[i], x[j], 0.0]);
                        weights.push(w[i] * w[j]);
                    }
                }
            } else {
                for k in 0..n {
                    for j in 0..n {
                        for i in 0..n {
                            points.push([x[i], x[j], x[k]]);
                            weights.push(w[i] * w[j] * w[k]);
                        }
                    }
                }
            }
            (points, weights)
        }
    };
    Ok(QuadratureRule { degree, points, weights })
}

// Duffy collapse of the square onto the triangle: ξ = u, η = v (1 - u).
fn collapsed_triangle(degree: usize) -> (Vec<Point>, Vec<f64>) {
    let n = points_for_degree(degree + 1);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = x[i];
            points.push([u, x[j] * (1.0 - u), 0.0]);
            weights.push(w[i] * w[j] * (1.0 - u));
        }
    }
    (points, weights)
}

fn collapsed_tetrahedron(degree: usize) -> (Vec<Point>, Vec<f64>) {
    let n = points_for_degree(degree + 2);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (u, v, s) = (x[i], x[j], x[k]);
                points.push([u, v * (1.0 - u), s * (1.0 - u) * (1.0 - v)]);
                weights.push(w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
            }
        }
    }
    (points, weights)
}

/// Physical quadrature points and weights on a facet given its vertices.
///
/// Segments are parametrised from their first vertex, triangles with the
/// affine simplex map, and quadrilateral faces with the bilinear map in
/// tensor vertex order.
pub fn facet_quadrature(vertices: &[Point], dim: usize, degree: usize) -> Result<Vec<(Point, f64)>, ElementError> {
    let v = |k: usize| vertices[k];
    let mut out = Vec::new();
    match (dim, vertices.len()) {
        (2, 2) => {
            let (x, w) = gauss_legendre((degree + 1).div_ceil(2).max(1));
            let t = geometry::sub(&v(1), &v(0));
            let len = geometry::norm(&t);
            for (xq, wq) in x.iter().zip(w.iter()) {
                out.push((geometry::add(&v(0), &geometry::scale(&t, *xq)), wq * len));
            }
        }
        (3, 3) => {
            let rule = quadrature_rule(CellKind::Tri, degree)?;
            let e1 = geometry::sub(&v(1), &v(0));
            let e2 = geometry::sub(&v(2), &v(0));
            let jac = geometry::norm(&geometry::cross(&e1, &e2));
            for (p, w) in rule.iter() {
                let x = geometry::add(&v(0), &geometry::add(&geometry::scale(&e1, p[0]), &geometry::scale(&e2, p[1])));
                out.push((x, w * jac));
            }
        }
        (3, 4) => {
            let rule = quadrature_rule(CellKind::Quad, degree)?;
            for (p, w) in rule.iter() {
                let (s, t) = (p[0], p[1]);
                let shape = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
                let ds = [-(1.0 - t), 1.0 - t, -t, t];
                let dt = [-(1.0 - s), -s, 1.0 - s, s];
                let mut x = [0.0; 3];
                let mut xs = [0.0; 3];
                let mut xt = [0.0; 3];
                for k in 0..4 {
                    x = geometry::add(&x, &geometry::scale(&v(k), shape[k]));
                    xs = geometry::add(&xs, &geometry::scale(&v(k), ds[k]));
                    xt = geometry::add(&xt, &geometry::scale(&v(k), dt[k]));
                }
                out.push((x, w * geometry::norm(&geometry::cross(&xs, &xt))));
            }
        }
        _ => return Err(ElementError::UnsupportedFacet { dim, n_vertices: vertices.len() }),
    }
    Ok(out)
}
