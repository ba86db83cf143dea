use nalgebra::DMatrix;
use rayon::prelude::*;

use super::LinalgError;

/// Rows above which `spmv` splits work across the rayon pool. Each row is
/// still summed sequentially, so results do not depend on the worker count.
const PAR_ROWS: usize = 8192;

/// Compressed sparse row matrix with strictly increasing column indices in
/// every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Build from raw arrays, checking every structural invariant.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        let bad = |msg: String| Err(LinalgError::InvalidStructure(msg));
        if indptr.len() != n_rows + 1 || indptr[0] != 0 {
            return bad(format!("row offsets must have length {} and start at 0", n_rows + 1));
        }
        if indices.len() != data.len() || *indptr.last().unwrap() != indices.len() {
            return bad("offset/index/value lengths disagree".into());
        }
        for r in 0..n_rows {
            if indptr[r] > indptr[r + 1] {
                return bad(format!("row offsets decrease at row {r}"));
            }
            let cols = &indices[indptr[r]..indptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("columns of row {r} are not strictly increasing"));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return bad(format!("column index out of range in row {r}"));
            }
        }
        Ok(Self { n_rows, n_cols, indptr, indices, data })
    }

    /// Assemble from `(row, col, value)` triplets; duplicates are summed in
    /// input order.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, LinalgError> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= n_rows || c >= n_cols) {
            return Err(LinalgError::InvalidStructure(format!("entry ({r}, {c}) outside {n_rows}x{n_cols}")));
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self { n_rows, n_cols, indptr, indices, data })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, indptr: vec![0; n_rows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self { n_rows: n, n_cols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), data: diag.to_vec() }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t).expect("entries are in range")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row_indices(&self, r: usize) -> &[usize] {
        &self.indices[self.indptr[r]..self.indptr[r + 1]]
    }

    pub fn row_values(&self, r: usize) -> &[f64] {
        &self.data[self.indptr[r]..self.indptr[r + 1]]
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_indices(r).iter().copied().zip(self.row_values(r).iter().copied())
    }

    /// Stored value at `(r, c)`, zero when absent.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let cols = self.row_indices(r);
        cols.binary_search(&c).map_or(0.0, |k| self.row_values(r)[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n_cols {
            return Err(LinalgError::DimensionMismatch { context: "spmv", expected: self.n_cols, found: x.len() });
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond debug assertions.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        let row_dot = |r: usize| -> f64 {
            let (s, e) = (self.indptr[r], self.indptr[r + 1]);
            self.indices[s..e].iter().zip(&self.data[s..e]).map(|(&c, &v)| v * x[c]).sum()
        };
        if self.n_rows >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| *yr = row_dot(r));
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = row_dot(r);
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                let k = next[c];
                indices[k] = r;
                data[k] = v;
                next[c] += 1;
            }
        }
        Self { n_rows: self.n_cols, n_cols: self.n_rows, indptr: counts, indices, data }
    }

    /// Rows `rows` and columns `cols` of `A`, renumbered in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Self, LinalgError> {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (k, &c) in cols.iter().enumerate() {
            if c >= self.n_cols {
                return Err(LinalgError::DimensionMismatch {
                    context: "submatrix columns",
                    expected: self.n_cols,
                    found: c,
                });
            }
            col_map[c] = k;
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for &r in rows {
            if r >= self.n_rows {
                return Err(LinalgError::DimensionMismatch {
                    context: "submatrix rows",
                    expected: self.n_rows,
                    found: r,
                });
            }
            buf.clear();
            buf.extend(self.row(r).filter(|&(c, _)| col_map[c] != usize::MAX).map(|(c, v)| (col_map[c], v)));
            buf.sort_unstable_by_key(|e| e.0);
            for &(c, v) in &buf {
                indices.push(c);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self { n_rows: rows.len(), n_cols: cols.len(), indptr, indices, data })
    }

    /// Sparse product `A B` (row-by-row accumulation).
    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.n_cols != other.n_rows {
            return Err(LinalgError::DimensionMismatch {
                context: "matmul",
                expected: self.n_cols,
                found: other.n_rows,
            });
        }
        let mut acc = vec![0.0; other.n_cols];
        let mut marker = vec![usize::MAX; other.n_cols];
        let mut row_cols: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.n_rows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in 0..self.n_rows {
            row_cols.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = 0.0;
                        row_cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            row_cols.sort_unstable();
            for &c in &row_cols {
                indices.push(c);
                data.push(acc[c]);
            }
            indptr.push(indices.len());
        }
        Ok(Self { n_rows: self.n_rows, n_cols: other.n_cols, indptr, indices, data })
    }

    /// `alpha A + beta B` on the union pattern.
    pub fn add(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch { context: "add", expected: self.n_rows, found: other.n_rows });
        }
        let mut indptr = Vec::with_capacity(self.n_rows + 1);
        indptr.push(0);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut data = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.n_rows {
            let (ac, av) = (self.row_indices(r), self.row_values(r));
            let (bc, bv) = (other.row_indices(r), other.row_values(r));
            let (mut i, mut j) = (0, 0);
            while i < ac.len() || j < bc.len() {
                let take_a = j == bc.len() || (i < ac.len() && ac[i] <= bc[j]);
                let take_b = i == ac.len() || (j < bc.len() && bc[j] <= ac[i]);
                let col = if take_a { ac[i] } else { bc[j] };
                let mut v = 0.0;
                if take_a {
                    v += alpha * av[i];
                    i += 1;
                }
                if take_b {
                    v += beta * bv[j];
                    j += 1;
                }
                indices.push(col);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self { n_rows: self.n_rows, n_cols: self.n_cols, indptr, indices, data })
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// Multiply row `r` by `d[r]`.
    pub fn scale_rows(&mut self, d: &[f64]) {
        for (r, &s) in d.iter().enumerate().take(self.n_rows) {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            self.data[a..b].iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Drop stored zeros.
    pub fn prune(&self) -> Self {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                if v != 0.0 {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { n_rows: self.n_rows, n_cols: self.n_cols, indptr, indices, data }
    }

    /// Largest `|A_ij - A_ji|` over the stored pattern.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                let t = if c < self.n_rows { self.get(c, r) } else { 0.0 };
                worst = worst.max((v - t).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Stack blocks into one matrix. `blocks[i][j]` may be `None` for a
    /// zero block; every block row must agree in height and every block
    /// column in width (given by `row_sizes`/`col_sizes`).
    pub fn block(
        blocks: &[Vec<Option<&CsrMatrix>>],
        row_sizes: &[usize],
        col_sizes: &[usize],
    ) -> Result<Self, LinalgError> {
        let n_rows: usize = row_sizes.iter().sum();
        let n_cols: usize = col_sizes.iter().sum();
        let col_off: Vec<usize> = col_sizes
            .iter()
            .scan(0, |s, &n| {
                let o = *s;
                *s += n;
                Some(o)
            })
            .collect();
        let mut indptr = Vec::with_capacity(n_rows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for (bi, &h) in row_sizes.iter().enumerate() {
            for (bj, b) in blocks[bi].iter().enumerate() {
                if let Some(b) = b {
                    if b.n_rows != h || b.n_cols != col_sizes[bj] {
                        return Err(LinalgError::DimensionMismatch { context: "block", expected: h, found: b.n_rows });
                    }
                }
            }
            for r in 0..h {
                for (bj, b) in blocks[bi].iter().enumerate() {
                    if let Some(b) = b {
                        for (c, v) in b.row(r) {
                            indices.push(col_off[bj] + c);
                            data.push(v);
                        }
                    }
                }
                indptr.push(indices.len());
            }
        }
        Ok(Self { n_rows, n_cols, indptr, indices, data })
    }
}
