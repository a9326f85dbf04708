//! Compressed sparse row storage.
//!
//! Column indices within a row are kept strictly increasing, which makes the
//! layout canonical: two matrices built from the same triplets in any order
//! compare equal and serialize identically.

/// A real sparse matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    /// Structural entries are kept even if they sum to zero.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Number of entries with magnitude above `drop_tol`.
    pub fn nnz_above(&self, drop_tol: f64) -> usize {
        self.values.iter().filter(|v| v.abs() > drop_tol).count()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Iterates the stored `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[r]..self.indptr[r + 1];
        self.indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let range = self.indptr[r]..self.indptr[r + 1];
        let cols = &self.indices[range.clone()];
        cols.binary_search(&c).ok().map(|k| self.values[range.start + k])
    }

    /// Iterates all stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yr = acc;
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, &t)
    }

    /// `self + alpha * other` on the union pattern.
    pub fn add_scaled(&self, other: &CsrMatrix, alpha: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t: Vec<_> = self.triplets().collect();
        t.extend(other.triplets().map(|(r, c, v)| (r, c, alpha * v)));
        CsrMatrix::from_triplets(self.nrows, self.ncols, &t)
    }

    /// Multiplies row `r` by `s[r]`.
    pub fn scale_rows(&self, s: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out.values[k] *= s[r];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }
}

/// Several matrices sharing one sparsity pattern, stored with interleaved
/// values so that a linear combination `sum_j a_j A_j` can be applied in a
/// single pass.
#[derive(Debug, Clone)]
pub struct StackedCsr {
    nrows: usize,
    count: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    /// `values[k * count + j]` is entry `k` of matrix `j`.
    values: Vec<f64>,
}

impl StackedCsr {
    pub fn new(mats: &[&CsrMatrix]) -> Self {
        assert!(!mats.is_empty());
        let nrows = mats[0].nrows;
        let count = mats.len();
        let mut t = Vec::new();
        for (j, m) in mats.iter().enumerate() {
            assert_eq!(m.nrows, nrows);
            t.extend(m.triplets().map(|(r, c, v)| (r, c, j, v)));
        }
        t.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last = None;
        for (r, c, j, v) in t {
            if last != Some((r, c)) {
                indices.push(c);
                values.extend(std::iter::repeat_n(0.0, count));
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
            let k = indices.len() - 1;
            values[k * count + j] += v;
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        StackedCsr {
            nrows,
            count,
            indptr,
            indices,
            values,
        }
    }

    /// `y = sum_j coef[j] A_j x`.
    pub fn combine_matvec(&self, coef: &[f64], x: &[f64], y: &mut [f64]) {
        self.apply::<false>(coef, x, y);
    }

    /// `y_r = sum_j coef[j] sum_c (A_j)_{rc} (x_c - x_r)`. Equal to
    /// [`combine_matvec`](Self::combine_matvec) when every `A_j` has zero row
    /// sums, and exactly zero for constant `x`.
    pub fn combine_matvec_diff(&self, coef: &[f64], x: &[f64], y: &mut [f64]) {
        self.apply::<true>(coef, x, y);
    }

    fn apply<const DIFF: bool>(&self, coef: &[f64], x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(coef.len(), self.count);
        let n = self.count;
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let xr = if DIFF { x[r] } else { 0.0 };
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                let v = &self.values[n * k..n * k + n];
                let w = match n {
                    2 => coef[0] * v[0] + coef[1] * v[1],
                    3 => coef[0] * v[0] + coef[1] * v[1] + coef[2] * v[2],
                    _ => coef.iter().zip(v).map(|(a, b)| a * b).sum(),
                };
                acc += w * (x[self.indices[k]] - xr);
            }
            *yr = acc;
        }
    }
}
