use super::{CsrMatrix, LinalgError, Preconditioner};

/// Zero-fill incomplete LU factorization. `L` (unit lower) and `U` share
/// the sparsity pattern of the input matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

pub fn ilu0(a: &CsrMatrix) -> Result<Ilu0, LinalgError> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(LinalgError::DimensionMismatch { context: "ilu0", expected: n, found: a.n_cols() });
    }
    let mut lu = a.clone();
    let indptr = lu.indptr().to_vec();
    let indices = lu.indices().to_vec();
    let mut diag = vec![0usize; n];
    for r in 0..n {
        let cols = &indices[indptr[r]..indptr[r + 1]];
        diag[r] = indptr[r] + cols.binary_search(&r).map_err(|_| LinalgError::MissingDiagonal(r))?;
    }
    let vals = lu.data_mut();
    // position of each column in the current row, usize::MAX if absent
    let mut pos = vec![usize::MAX; n];
    for i in 0..n {
        for k in indptr[i]..indptr[i + 1] {
            pos[indices[k]] = k;
        }
        for kk in indptr[i]..diag[i] {
            let k = indices[kk];
            let pivot = vals[diag[k]];
            let lik = vals[kk] / pivot;
            vals[kk] = lik;
            for jj in diag[k] + 1..indptr[k + 1] {
                let p = pos[indices[jj]];
                if p != usize::MAX {
                    vals[p] -= lik * vals[jj];
                }
            }
        }
        let d = vals[diag[i]];
        if d == 0.0 || !d.is_finite() {
            return Err(LinalgError::ZeroPivot(i));
        }
        for k in indptr[i]..indptr[i + 1] {
            pos[indices[k]] = usize::MAX;
        }
    }
    Ok(Ilu0 { lu, diag })
}

impl Ilu0 {
    /// Solve `L U z = r`.
    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        let (ptr, idx, val) = (self.lu.indptr(), self.lu.indices(), self.lu.data());
        for i in 0..n {
            let mut s = r[i];
            for k in ptr[i]..self.diag[i] {
                s -= val[k] * z[idx[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..ptr[i + 1] {
                s -= val[k] * z[idx[k]];
            }
            z[i] = s / val[self.diag[i]];
        }
    }
}

impl Preconditioner for Ilu0 {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve(r, z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn tridiagonal(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.5 + i as f64 * 0.1,
            1 => -1.0 + 0.05 * j as f64,
            _ => 0.0,
        })
    }

    #[test]
    fn exact_on_tridiagonal() {
        let d = tridiagonal(12);
        let f = ilu0(&CsrMatrix::from_dense(&d)).unwrap();
        let b: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let mut z = vec![0.0; 12];
        f.apply(&b, &mut z);
        let exact = d.lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..12 {
            assert!((z[i] - exact[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_divides() {
        let f = ilu0(&CsrMatrix::from_diagonal(&[2.0, 4.0])).unwrap();
        let mut z = vec![0.0; 2];
        f.apply(&[1.0, 1.0], &mut z);
        assert_eq!(z, vec![0.5, 0.25]);
    }

    #[test]
    fn zero_pivot_and_missing_diagonal() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(ilu0(&a), Err(LinalgError::ZeroPivot(1))));
        let b = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(ilu0(&b), Err(LinalgError::MissingDiagonal(0))));
    }
}
