//! Plain single-threaded host implementations of the kernel set.
//!
//! These are the sequential baseline the benchmark harness compares the
//! simulator against, and the operations behind the host solver backend.

use crate::error::{Error, Result};
use crate::matrix::{CsrMatrix, DenseMatrix};
use crate::scalar::Scalar;

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { expected: a, found: b });
    }
    Ok(())
}

pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) -> Result<()> {
    same_len(x.len(), y.len())?;
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = alpha * xi + *yi;
    }
    Ok(())
}

/// Left-to-right sum of products.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    same_len(x.len(), y.len())?;
    Ok(x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
}

pub fn nrm2<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
}

pub fn spmv<T: Scalar>(a: &CsrMatrix<T>, x: &[T], y: &mut [T]) -> Result<()> {
    if x.len() != a.n_cols() || y.len() != a.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix with x of {} and y of {}",
            a.n_rows(),
            a.n_cols(),
            x.len(),
            y.len()
        )));
    }
    for (i, yi) in y.iter_mut().enumerate() {
        let (cols, vals) = a.row(i);
        *yi = cols.iter().zip(vals).fold(T::zero(), |acc, (&j, &v)| acc + v * x[j]);
    }
    Ok(())
}

/// `r <- b - A x`.
pub fn residual<T: Scalar>(a: &CsrMatrix<T>, x: &[T], b: &[T], r: &mut [T]) -> Result<()> {
    same_len(a.n_rows(), b.len())?;
    spmv(a, x, r)?;
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    Ok(())
}

/// `C <- alpha A B + beta C` with an `i, k, j` triple loop.
pub fn gemm<T: Scalar>(alpha: T, a: &DenseMatrix<T>, b: &DenseMatrix<T>, beta: T, c: &mut DenseMatrix<T>) -> Result<()> {
    if a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols() {
        return Err(Error::DimensionMismatch("gemm shapes do not agree".into()));
    }
    for i in 0..a.rows() {
        for k in 0..b.cols() {
            let mut acc = T::zero();
            for j in 0..a.cols() {
                acc = acc + a.get(i, j) * b.get(j, k);
            }
            let old = c.get(i, k);
            let v = if alpha == T::zero() {
                if beta == T::zero() { T::zero() } else { beta * old }
            } else if beta == T::zero() {
                alpha * acc
            } else {
                alpha * acc + beta * old
            };
            c.set(i, k, v);
        }
    }
    Ok(())
}

fn relaxed_row<T: Scalar>(a: &CsrMatrix<T>, b: &[T], x: &[T], i: usize) -> T {
    let (cols, vals) = a.row(i);
    let mut off = T::zero();
    let mut diag = T::zero();
    for (&j, &v) in cols.iter().zip(vals) {
        if j == i {
            diag = v;
        } else {
            off = off + v * x[j];
        }
    }
    (b[i] - off) / diag
}

fn check_relaxation<T: Scalar>(a: &CsrMatrix<T>, b: &[T], x: &[T]) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("relaxation needs a square matrix".into()));
    }
    same_len(a.n_rows(), b.len())?;
    same_len(a.n_rows(), x.len())?;
    match a.first_bad_diagonal() {
        Some(row) => Err(Error::ZeroDiagonal { row }),
        None => Ok(()),
    }
}

pub fn jacobi_sweep<T: Scalar>(a: &CsrMatrix<T>, b: &[T], x_old: &[T], x_new: &mut [T]) -> Result<()> {
    check_relaxation(a, b, x_old)?;
    same_len(x_old.len(), x_new.len())?;
    for (i, xi) in x_new.iter_mut().enumerate() {
        *xi = relaxed_row(a, b, x_old, i);
    }
    Ok(())
}

pub fn gauss_seidel_sweep<T: Scalar>(a: &CsrMatrix<T>, b: &[T], x: &mut [T]) -> Result<()> {
    check_relaxation(a, b, x)?;
    for i in 0..x.len() {
        x[i] = relaxed_row(a, b, x, i);
    }
    Ok(())
}
