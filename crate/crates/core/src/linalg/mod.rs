//! Sparse linear algebra: CSR kernels, restarted GMRES, ILU(0),
//! smoothed-aggregation AMG, Schur-complement approximations and
//! MatrixMarket I/O.

mod amg;
mod csr;
mod gmres;
mod ilu;
pub mod mmio;

use thiserror::Error;

pub use amg::{amg_setup, amg_vcycle, dense_solve, AmgHierarchy, AmgOptions};
pub use csr::CsrMatrix;
pub use gmres::{gmres, GmresOptions, KrylovStats, Termination};
pub use ilu::{ilu0, Ilu0};

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: &'static str, expected: usize, found: usize },
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),
    #[error("row {0} has no diagonal entry in its sparsity pattern")]
    MissingDiagonal(usize),
    #[error("zero pivot in row {0}")]
    ZeroPivot(usize),
    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),
    #[error("singular coarse operator of size {0}")]
    SingularCoarse(usize),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("MatrixMarket: {0}")]
    MatrixMarket(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Square linear map `y = A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Approximate inverse `z ≈ M⁻¹ r`; implementations must be linear in `r`.
pub trait Preconditioner: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityPc(pub usize);

impl Preconditioner for IdentityPc {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal of a square matrix; fails on a zero entry.
pub fn diag_lump(a: &CsrMatrix) -> Result<Vec<f64>, LinalgError> {
    if a.n_rows() != a.n_cols() {
        return Err(LinalgError::DimensionMismatch { context: "diag_lump", expected: a.n_rows(), found: a.n_cols() });
    }
    let d = a.diagonal();
    match d.iter().position(|&v| v == 0.0) {
        Some(i) => Err(LinalgError::ZeroDiagonal(i)),
        None => Ok(d),
    }
}

/// `S = D - C diag(A)⁻¹ B`, formed exactly on the sparse pattern.
pub fn schur_selfp(d: &CsrMatrix, c: &CsrMatrix, diag_a: &[f64], b: &CsrMatrix) -> Result<CsrMatrix, LinalgError> {
    if c.n_cols() != diag_a.len() || b.n_rows() != diag_a.len() {
        return Err(LinalgError::DimensionMismatch {
            context: "schur_selfp inner",
            expected: diag_a.len(),
            found: c.n_cols(),
        });
    }
    if d.n_rows() != c.n_rows() || d.n_cols() != b.n_cols() {
        return Err(LinalgError::DimensionMismatch {
            context: "schur_selfp outer",
            expected: d.n_rows(),
            found: c.n_rows(),
        });
    }
    if let Some(i) = diag_a.iter().position(|&v| v == 0.0) {
        return Err(LinalgError::ZeroDiagonal(i));
    }
    let inv: Vec<f64> = diag_a.iter().map(|v| 1.0 / v).collect();
    let mut scaled_b = b.clone();
    scaled_b.scale_rows(&inv);
    let cb = c.matmul(&scaled_b)?;
    d.add(1.0, &cb, -1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diag_lump_examples() {
        assert_eq!(diag_lump(&CsrMatrix::identity(3)).unwrap(), vec![1.0; 3]);
        assert_eq!(diag_lump(&CsrMatrix::from_diagonal(&[2.0, 3.0])).unwrap(), vec![2.0, 3.0]);
        let z = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(diag_lump(&z), Err(LinalgError::ZeroDiagonal(1))));
    }

    #[test]
    fn schur_of_identities_vanishes() {
        let i = CsrMatrix::identity(2);
        let s = schur_selfp(&i, &i, &[1.0, 1.0], &i).unwrap();
        assert!(s.max_abs() == 0.0);
        assert!(schur_selfp(&i, &i, &[1.0], &i).is_err());
    }

    proptest! {
        #[test]
        fn schur_matches_dense(seed in 0u64..500, m in 1usize..12, n in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rand_dense = |r: usize, c: usize| {
                DMatrix::from_fn(r, c, |_, _| if rng.random::<f64>() < 0.5 { rng.random_range(-1.0..1.0) } else { 0.0 })
            };
            let (dd, dc, db) = (rand_dense(m, m), rand_dense(m, n), rand_dense(n, m));
            let diag: Vec<f64> = (0..n).map(|k| 0.5 + k as f64).collect();
            let s = schur_selfp(
                &CsrMatrix::from_dense(&dd),
                &CsrMatrix::from_dense(&dc),
                &diag,
                &CsrMatrix::from_dense(&db),
            ).unwrap();
            let dinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, diag.iter().map(|v| 1.0 / v)));
            let oracle = &dd - &dc * dinv * &db;
            prop_assert!((s.to_dense() - oracle).amax() < 1e-13);
        }
    }

    #[test]
    fn preconditioners_are_linear() {
        let a = {
            let mut t = Vec::new();
            for i in 0..30usize {
                t.push((i, i, 3.0));
                if i > 0 {
                    t.push((i, i - 1, -1.0));
                    t.push((i - 1, i, -1.2));
                }
            }
            CsrMatrix::from_triplets(30, 30, &t).unwrap()
        };
        let ilu = ilu0(&a).unwrap();
        let amg = amg_setup(&a, &AmgOptions { max_coarse: 4, ..Default::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r1: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r2: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let combo: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| 1.5 * a + 0.25 * b).collect();
        let pcs: [&dyn Preconditioner; 2] = [&ilu, &amg];
        for pc in pcs {
            let (mut z1, mut z2, mut zc) = (vec![0.0; 30], vec![0.0; 30], vec![0.0; 30]);
            pc.apply(&r1, &mut z1);
            pc.apply(&r2, &mut z2);
            pc.apply(&combo, &mut zc);
            for i in 0..30 {
                assert!((zc[i] - 1.5 * z1[i] - 0.25 * z2[i]).abs() < 1e-10);
            }
        }
    }
}
