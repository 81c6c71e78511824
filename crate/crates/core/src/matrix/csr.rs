use crate::error::{Error, Result};
use crate::scalar::{ElemKind, Scalar};

use super::DenseMatrix;

/// Compressed sparse row matrix with strictly increasing columns per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a matrix from raw CSR arrays, checking every structural invariant.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<T>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 {
            return Err(Error::InvalidCsr(format!(
                "row_ptr has {} entries, expected {}",
                row_ptr.len(),
                n_rows + 1
            )));
        }
        if row_ptr[0] != 0 {
            return Err(Error::InvalidCsr("row_ptr[0] must be 0".into()));
        }
        if col_idx.len() != vals.len() || row_ptr[n_rows] != vals.len() {
            return Err(Error::InvalidCsr(format!(
                "row_ptr ends at {} but there are {} column indices and {} values",
                row_ptr[n_rows],
                col_idx.len(),
                vals.len()
            )));
        }
        for i in 0..n_rows {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            if lo > hi {
                return Err(Error::InvalidCsr(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_idx[lo..hi];
            if let Some(&c) = cols.iter().find(|&&c| c >= n_cols) {
                return Err(Error::InvalidCsr(format!(
                    "column {c} in row {i} is out of range for {n_cols} columns"
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidCsr(format!(
                    "columns of row {i} are not strictly increasing"
                )));
            }
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    /// Explicit zeros are kept; repeated coordinates are rejected.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut entries: Vec<(usize, usize, T)>) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= n_rows || c >= n_cols) {
            return Err(Error::InvalidCsr(format!(
                "entry ({r}, {c}) outside {n_rows}x{n_cols}"
            )));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidCsr(format!(
                "duplicate entry ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = entries.iter().map(|e| e.1).collect();
        let vals = entries.iter().map(|e| e.2).collect();
        CsrMatrix::new(n_rows, n_cols, row_ptr, col_idx, vals)
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![T::one(); n],
        }
    }

    /// A matrix with no stored entries.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Drops exact zeros from a dense matrix.
    pub fn from_dense(dense: &DenseMatrix<T>) -> Self {
        let mut entries = Vec::new();
        for i in 0..dense.rows() {
            for j in 0..dense.cols() {
                let v = dense.get(i, j);
                if v != T::zero() {
                    entries.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(dense.rows(), dense.cols(), entries)
            .expect("dense entries are unique and in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn kind(&self) -> ElemKind {
        T::KIND
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn vals(&self) -> &[T] {
        &self.vals
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.vals[r])
    }

    /// Stored value at `(i, j)`, zero if absent.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(T::zero(), |k| vals[k])
    }

    /// First row whose diagonal entry is missing or zero.
    pub fn first_bad_diagonal(&self) -> Option<usize> {
        (0..self.n_rows.min(self.n_cols)).find(|&i| self.get(i, i) == T::zero())
            .or_else(|| (self.n_cols < self.n_rows).then_some(self.n_cols))
    }

    pub fn transpose(&self) -> Self {
        let entries = (0..self.n_rows)
            .flat_map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(move |(&j, &v)| (j, i, v))
            })
            .collect();
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, entries).expect("transpose of valid CSR")
    }

    /// Exact symmetry of both pattern and values.
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Converts the values to another precision.
    pub fn cast<U: Scalar>(&self) -> CsrMatrix<U> {
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            vals: self.vals.iter().map(|v| U::from_f64_lossy(v.as_f64())).collect(),
        }
    }
}
