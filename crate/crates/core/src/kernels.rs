//! Data-parallel numerical kernels over device buffers.
//!
//! Elementwise kernels and row-per-thread sparse kernels accumulate in a
//! fixed sequential order per output element, so they are bit-identical to a
//! plain host loop. Reductions use a shared-memory tree inside each block and
//! combine the block partials on the host in ascending block order; the
//! result depends on the launch geometry but never on the worker count.

use std::marker::PhantomData;

use crate::device::DeviceBuffer;
use crate::error::{Error, Result};
use crate::executor::{Dim3, Kernel, LaunchConfig, DEFAULT_BLOCK_SIZE};
use crate::matrix::{CsrMatrix, DenseMatrix};
use crate::scalar::{ElemKind, Scalar};
use crate::Runtime;

/// Tile edge of the 2D GEMM launch.
pub const GEMM_TILE: usize = 16;

fn check_vec<T: Scalar>(buf: &DeviceBuffer, len: usize) -> Result<()> {
    if buf.kind() != T::KIND {
        return Err(Error::KindMismatch {
            expected: T::KIND,
            found: buf.kind(),
        });
    }
    if buf.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            found: buf.len(),
        });
    }
    Ok(())
}

/// CSR matrix resident in device memory.
#[derive(Debug, Clone, Copy)]
pub struct DeviceCsr<T> {
    n_rows: usize,
    n_cols: usize,
    nnz: usize,
    row_ptr: DeviceBuffer,
    col_idx: DeviceBuffer,
    vals: DeviceBuffer,
    bad_diagonal: Option<usize>,
    _elem: PhantomData<T>,
}

impl<T: Scalar> DeviceCsr<T> {
    /// Reserves device storage for an `n_rows` x `n_cols` matrix with `nnz` entries.
    pub fn alloc(rt: &Runtime, n_rows: usize, n_cols: usize, nnz: usize) -> Result<Self> {
        if nnz > u32::MAX as usize || n_cols > u32::MAX as usize {
            return Err(Error::InvalidArgument("matrix too large for 32-bit device indices".into()));
        }
        let dev = rt.device();
        let row_ptr = dev.alloc::<u32>(n_rows + 1)?;
        let col_idx = dev.alloc::<u32>(nnz).inspect_err(|_| {
            let _ = dev.free(row_ptr);
        })?;
        let vals = dev.alloc::<T>(nnz).inspect_err(|_| {
            let _ = dev.free(row_ptr);
            let _ = dev.free(col_idx);
        })?;
        Ok(DeviceCsr {
            n_rows,
            n_cols,
            nnz,
            row_ptr,
            col_idx,
            vals,
            bad_diagonal: None,
            _elem: PhantomData,
        })
    }

    /// Copies a host matrix of matching shape into this allocation.
    pub fn copy_in(&mut self, rt: &Runtime, a: &CsrMatrix<T>) -> Result<()> {
        if (a.n_rows(), a.n_cols(), a.nnz()) != (self.n_rows, self.n_cols, self.nnz) {
            return Err(Error::DimensionMismatch(format!(
                "device CSR is {}x{} with {} entries, host matrix is {}x{} with {}",
                self.n_rows,
                self.n_cols,
                self.nnz,
                a.n_rows(),
                a.n_cols(),
                a.nnz()
            )));
        }
        let dev = rt.device();
        let to_u32 = |v: &[usize]| v.iter().map(|&i| i as u32).collect::<Vec<_>>();
        dev.copy_host_to_device(&to_u32(a.row_ptr()), &self.row_ptr)?;
        dev.copy_host_to_device(&to_u32(a.col_idx()), &self.col_idx)?;
        dev.copy_host_to_device(a.vals(), &self.vals)?;
        self.bad_diagonal = a.first_bad_diagonal();
        Ok(())
    }

    pub fn upload(rt: &Runtime, a: &CsrMatrix<T>) -> Result<Self> {
        let mut d = DeviceCsr::alloc(rt, a.n_rows(), a.n_cols(), a.nnz())?;
        if let Err(e) = d.copy_in(rt, a) {
            let _ = d.free(rt);
            return Err(e);
        }
        Ok(d)
    }

    pub fn free(self, rt: &Runtime) -> Result<()> {
        let dev = rt.device();
        dev.free(self.row_ptr)?;
        dev.free(self.col_idx)?;
        dev.free(self.vals)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// First row with a missing or zero diagonal, as of the last copy-in.
    pub fn bad_diagonal(&self) -> Option<usize> {
        self.bad_diagonal
    }

    fn buffers(&self) -> [DeviceBuffer; 3] {
        [self.row_ptr, self.col_idx, self.vals]
    }

    fn require_diagonal(&self) -> Result<()> {
        if self.n_rows != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected square",
                self.n_rows, self.n_cols
            )));
        }
        match self.bad_diagonal {
            Some(row) => Err(Error::ZeroDiagonal { row }),
            None => Ok(()),
        }
    }
}

/// Dense row-major matrix resident in device memory.
#[derive(Debug, Clone, Copy)]
pub struct DeviceMatrix<T> {
    rows: usize,
    cols: usize,
    buf: DeviceBuffer,
    _elem: PhantomData<T>,
}

impl<T: Scalar> DeviceMatrix<T> {
    pub fn alloc(rt: &Runtime, rows: usize, cols: usize) -> Result<Self> {
        Ok(DeviceMatrix {
            rows,
            cols,
            buf: rt.device().alloc::<T>(rows * cols)?,
            _elem: PhantomData,
        })
    }

    pub fn upload(rt: &Runtime, m: &DenseMatrix<T>) -> Result<Self> {
        let d = DeviceMatrix::alloc(rt, m.rows(), m.cols())?;
        rt.device().copy_host_to_device(m.data(), &d.buf)?;
        Ok(d)
    }

    pub fn copy_in(&self, rt: &Runtime, m: &DenseMatrix<T>) -> Result<()> {
        if (m.rows(), m.cols()) != (self.rows, self.cols) {
            return Err(Error::DimensionMismatch(format!(
                "device matrix is {}x{}, host matrix is {}x{}",
                self.rows,
                self.cols,
                m.rows(),
                m.cols()
            )));
        }
        rt.device().copy_host_to_device(m.data(), &self.buf)
    }

    pub fn download(&self, rt: &Runtime) -> Result<DenseMatrix<T>> {
        DenseMatrix::new(self.rows, self.cols, rt.device().download(&self.buf)?)
    }

    pub fn free(self, rt: &Runtime) -> Result<()> {
        rt.device().free(self.buf)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn buffer(&self) -> DeviceBuffer {
        self.buf
    }
}

/// `y <- alpha * x + y`.
pub fn axpy<T: Scalar>(rt: &Runtime, alpha: T, x: &DeviceBuffer, y: &DeviceBuffer) -> Result<()> {
    let n = x.len();
    check_vec::<T>(x, n)?;
    check_vec::<T>(y, n)?;
    let k = Kernel::<T>::new("axpy", &[T::KIND, T::KIND]).phase(move |t| {
        let i = t.ctx().global_x();
        if i < n {
            let (x, y) = (t.global::<T>(0), t.global::<T>(1));
            y.set(i, alpha * x.get(i) + y.get(i));
        }
    });
    rt.launch(&k, &LaunchConfig::linear(n), &[*x, *y])
}

/// `x <- alpha * x`.
pub fn scal<T: Scalar>(rt: &Runtime, alpha: T, x: &DeviceBuffer) -> Result<()> {
    let n = x.len();
    check_vec::<T>(x, n)?;
    let k = Kernel::<T>::new("scal", &[T::KIND]).phase(move |t| {
        let i = t.ctx().global_x();
        if i < n {
            let x = t.global::<T>(0);
            x.set(i, alpha * x.get(i));
        }
    });
    rt.launch(&k, &LaunchConfig::linear(n), &[*x])
}

/// Sets every element of `x` to `value`.
pub fn fill<T: Scalar>(rt: &Runtime, value: T, x: &DeviceBuffer) -> Result<()> {
    let n = x.len();
    check_vec::<T>(x, n)?;
    let k = Kernel::<T>::new("fill", &[T::KIND]).phase(move |t| {
        let i = t.ctx().global_x();
        if i < n {
            t.global::<T>(0).set(i, value);
        }
    });
    rt.launch(&k, &LaunchConfig::linear(n), &[*x])
}

/// `dst <- src`.
pub fn copy<T: Scalar>(rt: &Runtime, src: &DeviceBuffer, dst: &DeviceBuffer) -> Result<()> {
    check_vec::<T>(src, src.len())?;
    check_vec::<T>(dst, src.len())?;
    rt.device().copy_device_to_device(src, dst)
}

/// `x . y` with the default block size.
pub fn dot<T: Scalar>(rt: &Runtime, x: &DeviceBuffer, y: &DeviceBuffer) -> Result<T> {
    dot_with_block::<T>(rt, x, y, DEFAULT_BLOCK_SIZE)
}

/// `x . y` using blocks of `block_size` threads (a power of two, at most 1024).
pub fn dot_with_block<T: Scalar>(rt: &Runtime, x: &DeviceBuffer, y: &DeviceBuffer, block_size: usize) -> Result<T> {
    let n = x.len();
    check_vec::<T>(x, n)?;
    check_vec::<T>(y, n)?;
    if !block_size.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "reduction block size {block_size} is not a power of two"
        )));
    }
    let cfg = LaunchConfig::linear_with(n, block_size).with_shared(block_size);
    let n_blocks = cfg.grid.volume();
    let partials = rt.device().alloc::<T>(n_blocks)?;

    let mut k = Kernel::<T>::new("dot", &[T::KIND, T::KIND, T::KIND]).phase(move |t| {
        let i = t.ctx().global_x();
        let v = if i < n {
            t.global::<T>(0).get(i) * t.global::<T>(1).get(i)
        } else {
            T::zero()
        };
        let tid = t.ctx().thread_linear_id();
        t.shared_set(tid, v);
    });
    let mut stride = block_size / 2;
    while stride > 0 {
        k = k.phase(move |t| {
            let tid = t.ctx().thread_linear_id();
            if tid < stride {
                let v = t.shared_get(tid) + t.shared_get(tid + stride);
                t.shared_set(tid, v);
            }
        });
        stride /= 2;
    }
    k = k.phase(|t| {
        if t.ctx().thread_linear_id() == 0 {
            let b = t.ctx().block_linear_id();
            let v = t.shared_get(0);
            t.global::<T>(2).set(b, v);
        }
    });

    let launched = rt.launch(&k, &cfg, &[*x, *y, partials]);
    let host = launched.and_then(|()| rt.device().download::<T>(&partials));
    rt.device().free(partials)?;
    Ok(host?.into_iter().fold(T::zero(), |acc, p| acc + p))
}

/// Euclidean norm, `sqrt(x . x)`.
pub fn nrm2<T: Scalar>(rt: &Runtime, x: &DeviceBuffer) -> Result<T> {
    Ok(dot::<T>(rt, x, x)?.sqrt())
}

/// Parameter kinds of a CSR kernel: the three CSR arrays then `vectors` vectors.
fn csr_params<T: Scalar>(vectors: usize) -> Vec<ElemKind> {
    let mut kinds = vec![ElemKind::U32, ElemKind::U32, T::KIND];
    kinds.extend(std::iter::repeat(T::KIND).take(vectors));
    kinds
}

/// `y = A x` into a fresh buffer, one row per thread.
pub fn csr_spmv<T: Scalar>(rt: &Runtime, a: &DeviceCsr<T>, x: &DeviceBuffer) -> Result<DeviceBuffer> {
    let y = rt.device().alloc::<T>(a.n_rows)?;
    match csr_spmv_into(rt, a, x, &y) {
        Ok(()) => Ok(y),
        Err(e) => {
            let _ = rt.device().free(y);
            Err(e)
        }
    }
}

/// `y <- A x`, one row per thread.
pub fn csr_spmv_into<T: Scalar>(rt: &Runtime, a: &DeviceCsr<T>, x: &DeviceBuffer, y: &DeviceBuffer) -> Result<()> {
    if x.len() != a.n_cols {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns, vector has {} elements",
            a.n_cols,
            x.len()
        )));
    }
    check_vec::<T>(x, a.n_cols)?;
    check_vec::<T>(y, a.n_rows)?;
    let n = a.n_rows;
    let k = Kernel::<T>::new("csr_spmv", &csr_params::<T>(2)).phase(move |t| {
        let i = t.ctx().global_x();
        if i >= n {
            return;
        }
        let (rp, ci, av) = (t.global::<u32>(0), t.global::<u32>(1), t.global::<T>(2));
        let x = t.global::<T>(3);
        let mut acc = T::zero();
        for e in rp.get(i) as usize..rp.get(i + 1) as usize {
            acc = acc + av.get(e) * x.get(ci.get(e) as usize);
        }
        t.global::<T>(4).set(i, acc);
    });
    let [r, c, v] = a.buffers();
    rt.launch(&k, &LaunchConfig::linear(n), &[r, c, v, *x, *y])
}

/// `r <- b - A x`, one row per thread, with the row sum accumulated in
/// column order before the subtraction.
pub fn residual_into<T: Scalar>(
    rt: &Runtime,
    a: &DeviceCsr<T>,
    x: &DeviceBuffer,
    b: &DeviceBuffer,
    r: &DeviceBuffer,
) -> Result<()> {
    check_vec::<T>(x, a.n_cols)?;
    check_vec::<T>(b, a.n_rows)?;
    check_vec::<T>(r, a.n_rows)?;
    let n = a.n_rows;
    let k = Kernel::<T>::new("residual", &csr_params::<T>(3)).phase(move |t| {
        let i = t.ctx().global_x();
        if i >= n {
            return;
        }
        let (rp, ci, av) = (t.global::<u32>(0), t.global::<u32>(1), t.global::<T>(2));
        let x = t.global::<T>(3);
        let mut acc = T::zero();
        for e in rp.get(i) as usize..rp.get(i + 1) as usize {
            acc = acc + av.get(e) * x.get(ci.get(e) as usize);
        }
        let b = t.global::<T>(4).get(i);
        t.global::<T>(5).set(i, b - acc);
    });
    let [rp, ci, v] = a.buffers();
    rt.launch(&k, &LaunchConfig::linear(n), &[rp, ci, v, *x, *b, *r])
}

/// `C <- alpha A B + beta C`, one output element per thread on a 2D grid of
/// 16x16 blocks. With `beta == 0` the old C is not read; with `alpha == 0`
/// the product is skipped.
pub fn gemm<T: Scalar>(
    rt: &Runtime,
    alpha: T,
    a: &DeviceMatrix<T>,
    b: &DeviceMatrix<T>,
    beta: T,
    c: &DeviceMatrix<T>,
) -> Result<()> {
    if a.cols != b.rows || c.rows != a.rows || c.cols != b.cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot compute {}x{} = {}x{} * {}x{}",
            c.rows, c.cols, a.rows, a.cols, b.rows, b.cols
        )));
    }
    let (m, inner, p) = (a.rows, a.cols, b.cols);
    let k = Kernel::<T>::new("gemm", &[T::KIND, T::KIND, T::KIND]).phase(move |t| {
        let (col, row) = (t.ctx().global_x(), t.ctx().global_y());
        if row >= m || col >= p {
            return;
        }
        let out = t.global::<T>(2);
        let scaled = if alpha == T::zero() {
            T::zero()
        } else {
            let (a, b) = (t.global::<T>(0), t.global::<T>(1));
            let mut acc = T::zero();
            for j in 0..inner {
                acc = acc + a.get(row * inner + j) * b.get(j * p + col);
            }
            alpha * acc
        };
        let v = if beta == T::zero() {
            scaled
        } else if alpha == T::zero() {
            beta * out.get(row * p + col)
        } else {
            scaled + beta * out.get(row * p + col)
        };
        out.set(row * p + col, v);
    });
    let cfg = LaunchConfig::new(
        Dim3::xy(p.div_ceil(GEMM_TILE).max(1), m.div_ceil(GEMM_TILE).max(1)),
        Dim3::xy(GEMM_TILE, GEMM_TILE),
    );
    rt.launch(&k, &cfg, &[a.buf, b.buf, c.buf])
}

/// One Jacobi sweep into a fresh buffer.
pub fn jacobi_sweep<T: Scalar>(
    rt: &Runtime,
    a: &DeviceCsr<T>,
    b: &DeviceBuffer,
    x_old: &DeviceBuffer,
) -> Result<DeviceBuffer> {
    let x_new = rt.device().alloc::<T>(a.n_rows)?;
    match jacobi_sweep_into(rt, a, b, x_old, &x_new) {
        Ok(()) => Ok(x_new),
        Err(e) => {
            let _ = rt.device().free(x_new);
            Err(e)
        }
    }
}

/// `x_new[i] = (b[i] - sum_{j != i} A[i,j] x_old[j]) / A[i,i]` for every row,
/// reading only `x_old`.
pub fn jacobi_sweep_into<T: Scalar>(
    rt: &Runtime,
    a: &DeviceCsr<T>,
    b: &DeviceBuffer,
    x_old: &DeviceBuffer,
    x_new: &DeviceBuffer,
) -> Result<()> {
    a.require_diagonal()?;
    let n = a.n_rows;
    check_vec::<T>(b, n)?;
    check_vec::<T>(x_old, n)?;
    check_vec::<T>(x_new, n)?;
    let k = Kernel::<T>::new("jacobi_sweep", &csr_params::<T>(3)).phase(move |t| {
        let i = t.ctx().global_x();
        if i < n {
            let v = relaxed_row(t, i, 4);
            t.global::<T>(5).set(i, v);
        }
    });
    let [rp, ci, v] = a.buffers();
    rt.launch(&k, &LaunchConfig::linear(n), &[rp, ci, v, *b, *x_old, *x_new])
}

/// `(b[i] - sum_{j != i} A[i,j] x[j]) / A[i,i]` with CSR in args 0..3, `b`
/// in arg 3 and `x` in arg `x_arg`.
#[inline]
fn relaxed_row<T: Scalar>(t: &crate::ThreadScope<'_, T>, i: usize, x_arg: usize) -> T {
    let (rp, ci, av) = (t.global::<u32>(0), t.global::<u32>(1), t.global::<T>(2));
    let x = t.global::<T>(x_arg);
    let mut off = T::zero();
    let mut diag = T::zero();
    for e in rp.get(i) as usize..rp.get(i + 1) as usize {
        let j = ci.get(e) as usize;
        if j == i {
            diag = av.get(e);
        } else {
            off = off + av.get(e) * x.get(j);
        }
    }
    (t.global::<T>(3).get(i) - off) / diag
}

/// Updates `x[row]` in place from the current contents of `x`, as one
/// single-thread launch.
pub fn gauss_seidel_row<T: Scalar>(
    rt: &Runtime,
    a: &DeviceCsr<T>,
    b: &DeviceBuffer,
    x: &DeviceBuffer,
    row: usize,
) -> Result<()> {
    a.require_diagonal()?;
    let n = a.n_rows;
    if row >= n {
        return Err(Error::InvalidArgument(format!("row {row} out of range for {n} rows")));
    }
    check_vec::<T>(b, n)?;
    check_vec::<T>(x, n)?;
    let k = Kernel::<T>::new("gauss_seidel_row", &csr_params::<T>(2)).phase(move |t| {
        let v = relaxed_row(t, row, 4);
        t.global::<T>(4).set(row, v);
    });
    let [rp, ci, v] = a.buffers();
    rt.launch(&k, &LaunchConfig::new(1, 1), &[rp, ci, v, *b, *x])
}

/// Forward Gauss-Seidel sweep: rows updated in natural order, one launch per row.
pub fn gauss_seidel_sweep<T: Scalar>(rt: &Runtime, a: &DeviceCsr<T>, b: &DeviceBuffer, x: &DeviceBuffer) -> Result<()> {
    (0..a.n_rows).try_for_each(|row| gauss_seidel_row(rt, a, b, x, row))
}
