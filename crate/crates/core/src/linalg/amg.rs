//! Smoothed-aggregation algebraic multigrid.
//!
//! Aggregates are built greedily from the symmetric strength graph
//! `|a_ij| ≥ θ sqrt(|a_ii a_jj|)`. The tentative prolongator restricts a
//! relaxed constant vector to each aggregate and is smoothed by one damped
//! Jacobi step with weight `4 / (3 ρ(D⁻¹A))` (2/3 for a Laplacian).
//! Coarse operators are Galerkin products `Pᵀ A P`. Smoothing is symmetric Gauss-Seidel, so
//! one V-cycle is a symmetric linear operator on symmetric input.

use nalgebra::{DMatrix, DVector};

use super::{CsrMatrix, LinalgError, Preconditioner};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmgOptions {
    pub strength: f64,
    /// Prolongator smoothing weight relative to `1 / ρ(D⁻¹A)`.
    pub jacobi_weight: f64,
    /// Levels at or below this size are solved directly.
    pub max_coarse: usize,
    pub max_levels: usize,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    /// Largest stalled level still handed to the dense solver; larger ones
    /// get `stalled_sweeps` symmetric Gauss-Seidel sweeps instead.
    pub max_dense: usize,
    pub stalled_sweeps: usize,
    /// Symmetric Gauss-Seidel sweeps applied to the constant candidate
    /// before it defines the tentative prolongator.
    pub candidate_sweeps: usize,
}

impl Default for AmgOptions {
    fn default() -> Self {
        Self {
            strength: 0.08,
            jacobi_weight: 4.0 / 3.0,
            max_coarse: 64,
            max_levels: 25,
            pre_sweeps: 1,
            post_sweeps: 1,
            max_dense: 1024,
            stalled_sweeps: 10,
            candidate_sweeps: 4,
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    a: CsrMatrix,
    inv_diag: Vec<f64>,
    p: CsrMatrix,
    r: CsrMatrix,
}

#[derive(Debug, Clone)]
enum CoarseSolver {
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Smoother { a: CsrMatrix, inv_diag: Vec<f64>, sweeps: usize },
}

/// Multigrid hierarchy; level 0 is the input matrix.
#[derive(Debug, Clone)]
pub struct AmgHierarchy {
    levels: Vec<Level>,
    coarse: CoarseSolver,
    coarse_dim: usize,
    opts: AmgOptions,
    n: usize,
}

impl AmgHierarchy {
    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse_dim
    }

    /// Operator dimensions from finest to coarsest.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.levels.iter().map(|l| l.a.n_rows()).collect();
        s.push(self.coarse_dim);
        s
    }

    /// Galerkin operator of level `l` (for `l < n_levels() - 1`).
    pub fn level_operator(&self, l: usize) -> Option<(&CsrMatrix, &CsrMatrix)> {
        self.levels.get(l).map(|lv| (&lv.a, &lv.p))
    }
}

fn inverse_diagonal(a: &CsrMatrix) -> Result<Vec<f64>, LinalgError> {
    a.diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| if d == 0.0 || !d.is_finite() { Err(LinalgError::ZeroDiagonal(i)) } else { Ok(1.0 / d) })
        .collect()
}

/// Greedy aggregation; returns the aggregate of every node (`None` for
/// nodes without strong connections) and the aggregate count.
fn aggregate(a: &CsrMatrix, theta: f64) -> (Vec<Option<usize>>, usize) {
    let n = a.n_rows();
    let diag = a.diagonal();
    let strong: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            a.row(i)
                .filter(|&(j, v)| j != i && v != 0.0 && v.abs() >= theta * (diag[i] * diag[j]).abs().sqrt())
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let mut agg: Vec<Option<usize>> = vec![None; n];
    let isolated: Vec<bool> = strong.iter().map(|s| s.is_empty()).collect();
    let mut count = 0;
    // pass 1: seed aggregates from nodes whose whole neighbourhood is free
    for i in 0..n {
        if isolated[i] || agg[i].is_some() || strong[i].iter().any(|&j| agg[j].is_some()) {
            continue;
        }
        agg[i] = Some(count);
        for &j in &strong[i] {
            agg[j] = Some(count);
        }
        count += 1;
    }
    // pass 2: attach leftovers to a neighbouring aggregate
    let snapshot = agg.clone();
    for i in 0..n {
        if isolated[i] || agg[i].is_some() {
            continue;
        }
        if let Some(&j) = strong[i].iter().find(|&&j| snapshot[j].is_some()) {
            agg[i] = snapshot[j];
        }
    }
    // pass 3: whatever is left forms new aggregates with free neighbours
    for i in 0..n {
        if isolated[i] || agg[i].is_some() {
            continue;
        }
        agg[i] = Some(count);
        for &j in &strong[i] {
            if agg[j].is_none() {
                agg[j] = Some(count);
            }
        }
        count += 1;
    }
    (agg, count)
}

fn dense_lu(a: &CsrMatrix) -> Result<CoarseSolver, LinalgError> {
    let lu = a.to_dense().lu();
    if !lu.is_invertible() {
        return Err(LinalgError::SingularCoarse(a.n_rows()));
    }
    Ok(CoarseSolver::Dense(lu))
}

pub fn amg_setup(a: &CsrMatrix, opts: &AmgOptions) -> Result<AmgHierarchy, LinalgError> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(LinalgError::DimensionMismatch { context: "amg_setup", expected: n, found: a.n_cols() });
    }
    let mut levels = Vec::new();
    let mut current = a.clone();
    let mut candidate = vec![1.0; n];
    loop {
        let inv_diag = inverse_diagonal(&current)?;
        let size = current.n_rows();
        if size <= opts.max_coarse || levels.len() + 1 >= opts.max_levels {
            let coarse = if size <= opts.max_dense {
                dense_lu(&current)?
            } else {
                CoarseSolver::Smoother { a: current, inv_diag, sweeps: opts.stalled_sweeps }
            };
            return Ok(AmgHierarchy { levels, coarse, coarse_dim: size, opts: *opts, n });
        }
        let (agg, count) = aggregate(&current, opts.strength);
        if count == 0 || count as f64 > 0.9 * size as f64 {
            let coarse = if size <= opts.max_dense {
                dense_lu(&current)?
            } else {
                CoarseSolver::Smoother { a: current, inv_diag, sweeps: opts.stalled_sweeps }
            };
            return Ok(AmgHierarchy { levels, coarse, coarse_dim: size, opts: *opts, n });
        }
        // relax the near-null candidate on A b = 0 so it decays towards
        // Dirichlet boundaries, then normalise it per aggregate
        let zero = vec![0.0; size];
        for _ in 0..opts.candidate_sweeps {
            sgs(&current, &inv_diag, &zero, &mut candidate);
        }
        let mut agg_norm = vec![0.0; count];
        for (i, g) in agg.iter().enumerate() {
            if let Some(g) = g {
                agg_norm[*g] += candidate[i] * candidate[i];
            }
        }
        let degenerate: Vec<bool> = agg_norm.iter().map(|&v| !(v > 1e-300)).collect();
        let agg_size = agg.iter().flatten().fold(vec![0usize; count], |mut c, &g| {
            c[g] += 1;
            c
        });
        let triplets: Vec<(usize, usize, f64)> = agg
            .iter()
            .enumerate()
            .filter_map(|(i, g)| {
                g.map(|g| {
                    let v = if degenerate[g] {
                        1.0 / (agg_size[g] as f64).sqrt()
                    } else {
                        candidate[i] / agg_norm[g].sqrt()
                    };
                    (i, g, v)
                })
            })
            .collect();
        let tentative = CsrMatrix::from_triplets(size, count, &triplets)?;
        candidate = agg_norm.iter().map(|v| if *v > 1e-300 { v.sqrt() } else { 1.0 }).collect();
        // P = (I - ω D⁻¹ A) P_tent
        let mut dinv_a = current.clone();
        dinv_a.scale_rows(&inv_diag);
        let omega = opts.jacobi_weight / spectral_radius(&dinv_a);
        let smoothed = dinv_a.matmul(&tentative)?;
        let p = tentative.add(1.0, &smoothed, -omega)?.prune();
        let r = p.transpose();
        let coarse_a = r.matmul(&current.matmul(&p)?)?.prune();
        levels.push(Level { a: current, inv_diag, p, r });
        current = coarse_a;
    }
}

/// Power-iteration estimate of the spectral radius, started from a fixed
/// non-smooth vector so setup stays deterministic.
fn spectral_radius(a: &CsrMatrix) -> f64 {
    let n = a.n_rows();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 17) as f64 / 17.0).collect();
    let mut w = vec![0.0; n];
    let mut rho = 1.0;
    for _ in 0..20 {
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        a.spmv_into(&v, &mut w);
        rho = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut w);
    }
    if rho > 0.0 && rho.is_finite() {
        rho
    } else {
        1.0
    }
}

/// Forward then backward Gauss-Seidel sweep on `a x = b`.
fn sgs(a: &CsrMatrix, inv_diag: &[f64], b: &[f64], x: &mut [f64]) {
    let n = a.n_rows();
    let (ptr, idx, val) = (a.indptr(), a.indices(), a.data());
    let relax = |i: usize, x: &mut [f64]| {
        let mut s = b[i];
        for k in ptr[i]..ptr[i + 1] {
            let j = idx[k];
            if j != i {
                s -= val[k] * x[j];
            }
        }
        x[i] = s * inv_diag[i];
    };
    for i in 0..n {
        relax(i, x);
    }
    for i in (0..n).rev() {
        relax(i, x);
    }
}

impl AmgHierarchy {
    fn cycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        if level == self.levels.len() {
            match &self.coarse {
                CoarseSolver::Dense(lu) => {
                    let sol = lu.solve(&DVector::from_column_slice(b)).expect("coarse operator checked invertible");
                    x.copy_from_slice(sol.as_slice());
                }
                CoarseSolver::Smoother { a, inv_diag, sweeps } => {
                    x.iter_mut().for_each(|v| *v = 0.0);
                    for _ in 0..*sweeps {
                        sgs(a, inv_diag, b, x);
                    }
                }
            }
            return;
        }
        let lv = &self.levels[level];
        x.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..self.opts.pre_sweeps {
            sgs(&lv.a, &lv.inv_diag, b, x);
        }
        let mut res = vec![0.0; b.len()];
        lv.a.spmv_into(x, &mut res);
        for (ri, bi) in res.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let mut rc = vec![0.0; lv.r.n_rows()];
        lv.r.spmv_into(&res, &mut rc);
        let mut ec = vec![0.0; rc.len()];
        self.cycle(level + 1, &rc, &mut ec);
        let mut corr = vec![0.0; b.len()];
        lv.p.spmv_into(&ec, &mut corr);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += ci;
        }
        // the adjoint of a forward/backward sweep is the same sweep
        for _ in 0..self.opts.post_sweeps {
            sgs(&lv.a, &lv.inv_diag, b, x);
        }
    }
}

/// One V-cycle with zero initial guess: `z ≈ A⁻¹ r`.
pub fn amg_vcycle(h: &AmgHierarchy, r: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; r.len()];
    h.cycle(0, r, &mut z);
    z
}

impl Preconditioner for AmgHierarchy {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.cycle(0, r, z);
    }
}

/// Dense LU solve used for small direct solves and test oracles.
pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let m: DMatrix<f64> = a.to_dense();
    m.lu()
        .solve(&DVector::from_column_slice(b))
        .map(|v| v.as_slice().to_vec())
        .ok_or(LinalgError::SingularCoarse(a.n_rows()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poisson_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn poisson_2d(m: usize) -> CsrMatrix {
        let n = m * m;
        let mut t = Vec::new();
        for j in 0..m {
            for i in 0..m {
                let r = i + m * j;
                t.push((r, r, 4.0));
                if i > 0 {
                    t.push((r, r - 1, -1.0));
                }
                if i + 1 < m {
                    t.push((r, r + 1, -1.0));
                }
                if j > 0 {
                    t.push((r, r - m, -1.0));
                }
                if j + 1 < m {
                    t.push((r, r + m, -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn one_cycle_reduction(a: &CsrMatrix, h: &AmgHierarchy, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = (0..a.n_rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = amg_vcycle(h, &b);
        let az = a.spmv(&z).unwrap();
        let r: Vec<f64> = b.iter().zip(&az).map(|(x, y)| x - y).collect();
        norm(&r) / norm(&b)
    }

    /// Geometric-mean residual reduction per cycle of the stationary
    /// iteration `x += M (b - A x)`.
    fn cycle_convergence_factor(a: &CsrMatrix, h: &AmgHierarchy, cycles: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let b: Vec<f64> = (0..a.n_rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = vec![0.0; b.len()];
        let mut r = b.clone();
        let r0 = norm(&r);
        for _ in 0..cycles {
            let z = amg_vcycle(h, &r);
            x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
            let ax = a.spmv(&x).unwrap();
            r = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        }
        (norm(&r) / r0).powf(1.0 / cycles as f64)
    }

    #[test]
    fn poisson_1d_reduction() {
        let a = poisson_1d(63);
        let h = amg_setup(&a, &AmgOptions { max_coarse: 8, ..Default::default() }).unwrap();
        assert!(h.n_levels() > 1);
        let rho = cycle_convergence_factor(&a, &h, 5);
        assert!(rho < 0.2, "{rho} (first cycle {})", one_cycle_reduction(&a, &h, 1));
    }

    #[test]
    fn poisson_2d_reduction() {
        let a = poisson_2d(40);
        let h = amg_setup(&a, &AmgOptions::default()).unwrap();
        assert!(h.n_levels() >= 3, "{:?}", h.level_sizes());
        assert!(h.coarse_dim() <= 64);
        let rho = one_cycle_reduction(&a, &h, 2);
        assert!(rho < 0.9, "{rho}");
    }

    #[test]
    fn identity_is_reproduced() {
        let a = CsrMatrix::identity(100);
        let h = amg_setup(&a, &AmgOptions::default()).unwrap();
        let r: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(amg_vcycle(&h, &r), r);
    }

    #[test]
    fn zero_diagonal_is_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(amg_setup(&a, &AmgOptions::default()), Err(LinalgError::ZeroDiagonal(0))));
    }

    #[test]
    fn galerkin_levels() {
        let a = poisson_2d(20);
        let h = amg_setup(&a, &AmgOptions::default()).unwrap();
        let (a0, p0) = h.level_operator(0).unwrap();
        let sizes = h.level_sizes();
        let galerkin = p0.transpose().matmul(&a0.matmul(p0).unwrap()).unwrap();
        if let Some((a1, _)) = h.level_operator(1) {
            assert!((galerkin.to_dense() - a1.to_dense()).amax() < 1e-12);
        }
        assert!(sizes.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn vcycle_is_symmetric_and_linear() {
        let a = poisson_2d(25);
        let h = amg_setup(&a, &AmgOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = a.n_rows();
        let r1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z1 = amg_vcycle(&h, &r1);
        let z2 = amg_vcycle(&h, &r2);
        let a12: f64 = z1.iter().zip(&r2).map(|(a, b)| a * b).sum();
        let a21: f64 = z2.iter().zip(&r1).map(|(a, b)| a * b).sum();
        assert!((a12 - a21).abs() < 1e-8 * a12.abs().max(1.0));
        let combo: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let zc = amg_vcycle(&h, &combo);
        for i in 0..n {
            assert!((zc[i] - (2.0 * z1[i] - 0.5 * z2[i])).abs() < 1e-10);
        }
    }
}
