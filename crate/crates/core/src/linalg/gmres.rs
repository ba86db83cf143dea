use std::time::Instant;

use super::{CsrMatrix, LinalgError, LinearOperator, Preconditioner};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub rtol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { rtol: 1e-7, max_iter: 1000, restart: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The Krylov space stopped growing (or a restart cycle made no
    /// progress) before the tolerance was met.
    Breakdown,
}

/// Outcome of a Krylov solve.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    /// True relative residual `‖b - A x‖ / ‖b‖` at exit.
    pub rel_residual: f64,
    pub converged: bool,
    pub termination: Termination,
    pub wall_time: f64,
    /// Preconditioned relative residual estimate after every iteration,
    /// starting with the initial value.
    pub history: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn true_residual(a: &dyn LinearOperator, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    a.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm(r)
}

/// Restarted GMRES with left preconditioning (modified Gram-Schmidt,
/// Givens rotations).
///
/// Inner iterations stop on the preconditioned residual estimate; at the end
/// of each cycle the true residual is checked and, if it is still above
/// `rtol`, the inner tolerance is tightened and iteration continues.
pub fn gmres(
    a: &dyn LinearOperator,
    m: &dyn Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &GmresOptions,
) -> Result<(Vec<f64>, KrylovStats), LinalgError> {
    let start = Instant::now();
    let n = a.dim();
    if b.len() != n || m.dim() != n {
        return Err(LinalgError::DimensionMismatch { context: "gmres", expected: n, found: b.len() });
    }
    if opts.restart == 0 || !(opts.rtol > 0.0) {
        return Err(LinalgError::InvalidOptions(format!("restart {} rtol {}", opts.restart, opts.rtol)));
    }
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => return Err(LinalgError::DimensionMismatch { context: "gmres x0", expected: n, found: x0.len() }),
        None => vec![0.0; n],
    };
    let bnorm = norm(b);
    let mut r = vec![0.0; n];
    let mut stats = KrylovStats {
        iterations: 0,
        rel_residual: 0.0,
        converged: true,
        termination: Termination::Converged,
        wall_time: 0.0,
        history: Vec::new(),
    };
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        stats.history.push(0.0);
        stats.wall_time = start.elapsed().as_secs_f64();
        return Ok((x, stats));
    }

    let k = opts.restart;
    let mut basis: Vec<Vec<f64>> = (0..=k).map(|_| vec![0.0; n]).collect();
    let mut h = vec![vec![0.0; k]; k + 1];
    let (mut cs, mut sn) = (vec![0.0; k], vec![0.0; k]);
    let mut g = vec![0.0; k + 1];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];

    // reference norm for the preconditioned residual
    m.apply(b, &mut z);
    let pb = norm(&z).max(f64::MIN_POSITIVE);
    let mut inner_tol = opts.rtol;
    let mut true_rel = true_residual(a, b, &x, &mut r) / bnorm;
    let mut prev_cycle_rel = f64::INFINITY;

    loop {
        if !true_rel.is_finite() {
            stats.termination = Termination::Breakdown;
            break;
        }
        if true_rel <= opts.rtol {
            stats.termination = Termination::Converged;
            break;
        }
        if stats.iterations >= opts.max_iter {
            stats.termination = Termination::MaxIterations;
            break;
        }
        if true_rel >= prev_cycle_rel * (1.0 - 1e-12) {
            stats.termination = Termination::Breakdown;
            break;
        }
        prev_cycle_rel = true_rel;

        m.apply(&r, &mut z);
        let beta = norm(&z);
        if stats.history.is_empty() {
            stats.history.push(beta / pb);
        }
        if beta == 0.0 || !beta.is_finite() {
            stats.termination = Termination::Breakdown;
            break;
        }
        for (v, zi) in basis[0].iter_mut().zip(&z) {
            *v = zi / beta;
        }
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        let mut used = 0;
        let mut happy = false;
        for j in 0..k {
            if stats.iterations >= opts.max_iter {
                break;
            }
            a.apply(&basis[j], &mut w);
            m.apply(&w, &mut z);
            for i in 0..=j {
                let hij = dot(&z, &basis[i]);
                h[i][j] = hij;
                for (zv, bv) in z.iter_mut().zip(&basis[i]) {
                    *zv -= hij * bv;
                }
            }
            let hnext = norm(&z);
            if !hnext.is_finite() {
                break;
            }
            h[j + 1][j] = hnext;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            stats.iterations += 1;
            let est = g[j + 1].abs() / pb;
            stats.history.push(est);
            if hnext <= 1e-14 * beta {
                happy = true;
                break;
            }
            for (v, zi) in basis[j + 1].iter_mut().zip(&z) {
                *v = zi / hnext;
            }
            if est <= inner_tol {
                break;
            }
        }
        // back substitution and update
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for l in i + 1..used {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            for (xv, bv) in x.iter_mut().zip(&basis[i]) {
                *xv += yi * bv;
            }
        }
        let new_rel = true_residual(a, b, &x, &mut r) / bnorm;
        if new_rel > opts.rtol && stats.history.last().is_some_and(|&e| e <= inner_tol) {
            // estimate met but the true residual lags behind: tighten
            inner_tol *= (opts.rtol / new_rel).max(1e-3) * 0.5;
        }
        true_rel = new_rel;
        if happy && true_rel > opts.rtol {
            stats.termination = Termination::Breakdown;
            break;
        }
        if used == 0 {
            stats.termination = Termination::Breakdown;
            break;
        }
    }
    stats.rel_residual = true_rel;
    stats.converged = stats.termination == Termination::Converged;
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok((x, stats))
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::IdentityPc;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(7);
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 2.0).collect();
        let (x, s) = gmres(&a, &IdentityPc(7), &b, None, &GmresOptions::default()).unwrap();
        assert_eq!(s.iterations, 1);
        assert!(s.converged);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (x, s) = gmres(&CsrMatrix::identity(3), &IdentityPc(3), &[0.0; 3], None, &GmresOptions::default()).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn matches_dense_lu_on_diagonally_dominant_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut d = DMatrix::from_fn(10, 10, |_, _| rng.random_range(-1.0..1.0));
        d = &d + d.transpose();
        for i in 0..10 {
            d[(i, i)] = 12.0 + rng.random::<f64>();
        }
        let b: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = CsrMatrix::from_dense(&d);
        let opts = GmresOptions { rtol: 1e-10, ..Default::default() };
        let (x, s) = gmres(&a, &IdentityPc(10), &b, None, &opts).unwrap();
        assert!(s.converged && s.rel_residual <= 1e-10);
        let exact = d.lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..10 {
            assert!((x[i] - exact[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn small_restart_still_converges() {
        // rotation-like non-normal matrix
        let d = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 1.0, 0.0, 0.0, //
                -1.0, 1.0, 1.0, 0.0, //
                0.0, -1.0, 1.0, 1.0, //
                0.0, 0.0, -1.0, 1.0,
            ],
        );
        let a = CsrMatrix::from_dense(&d);
        let b = vec![1.0, 0.0, 0.0, 1.0];
        let opts = GmresOptions { rtol: 1e-10, ..Default::default() };
        let (_, full) = gmres(&a, &IdentityPc(4), &b, None, &opts).unwrap();
        let (_, short) = gmres(&a, &IdentityPc(4), &b, None, &GmresOptions { restart: 2, ..opts }).unwrap();
        assert!(full.converged && short.converged);
        assert!(short.iterations > full.iterations, "{} vs {}", short.iterations, full.iterations);
    }

    #[test]
    fn residual_estimate_is_monotone_within_cycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 40;
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else if rng.random::<f64>() < 0.1 {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let a = CsrMatrix::from_dense(&d);
        let b = vec![1.0; n];
        let opts = GmresOptions { rtol: 1e-12, restart: 50, ..Default::default() };
        let (_, s) = gmres(&a, &IdentityPc(n), &b, None, &opts).unwrap();
        for w in s.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn max_iterations_reported() {
        let n = 50;
        let d = DMatrix::from_fn(n, n, |i, j| if j == (i + 1) % n { 1.0 } else { 0.0 });
        let a = CsrMatrix::from_dense(&d);
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        let (_, s) =
            gmres(&a, &IdentityPc(n), &b, None, &GmresOptions { max_iter: 5, restart: 30, rtol: 1e-8 }).unwrap();
        assert_eq!(s.termination, Termination::MaxIterations);
        assert!(!s.converged);
        assert_eq!(s.iterations, 5);
    }

    #[test]
    fn stagnation_reported_as_breakdown() {
        // cyclic shift with restart 1 makes no progress at all
        let n = 4;
        let d = DMatrix::from_fn(n, n, |i, j| if j == (i + 1) % n { 1.0 } else { 0.0 });
        let a = CsrMatrix::from_dense(&d);
        let b = vec![1.0, 0.0, 0.0, 0.0];
        let (_, s) =
            gmres(&a, &IdentityPc(n), &b, None, &GmresOptions { max_iter: 100, restart: 1, rtol: 1e-8 }).unwrap();
        assert_eq!(s.termination, Termination::Breakdown);
    }

    #[test]
    fn non_finite_data_is_a_breakdown() {
        let a = CsrMatrix::identity(3);
        let b = vec![1.0, f64::NAN, 0.0];
        let (_, s) = gmres(&a, &IdentityPc(3), &b, None, &GmresOptions::default()).unwrap();
        assert_eq!(s.termination, Termination::Breakdown);
        assert!(!s.converged);
        assert_eq!(s.iterations, 0);
    }
}
