//! Where a solver's vectors live and how its operations run.
//!
//! The solver algorithms are written once against [`Backend`]. The device
//! backend keeps every vector in simulated device memory and runs each
//! operation as a kernel launch; the host backend is the plain sequential
//! reference used as the benchmark baseline.

use crate::device::DeviceBuffer;
use crate::error::{Error, Result};
use crate::executor::LaunchConfig;
use crate::kernels::{self, DeviceCsr};
use crate::matrix::CsrMatrix;
use crate::reference;
use crate::scalar::Scalar;
use crate::Runtime;

pub trait Backend<T: Scalar> {
    type Vector: Copy;
    type Matrix;

    /// Simulated workers executing the operations (1 for the host).
    fn workers(&self) -> usize;

    fn alloc_matrix(&mut self, n_rows: usize, n_cols: usize, nnz: usize) -> Result<Self::Matrix>;
    fn alloc_vector(&mut self, n: usize) -> Result<Self::Vector>;
    fn copy_matrix_in(&mut self, src: &CsrMatrix<T>, dst: &mut Self::Matrix) -> Result<()>;
    fn copy_in(&mut self, src: &[T], dst: Self::Vector) -> Result<()>;
    fn copy_out(&mut self, src: Self::Vector, dst: &mut [T]) -> Result<()>;
    /// Launch geometry for vectors of length `n`, if there is one.
    fn layout(&mut self, n: usize) -> Option<LaunchConfig>;
    /// Frees the matrix (if any) and every vector this backend allocated.
    fn release(&mut self, matrix: Option<Self::Matrix>) -> Result<()>;

    fn spmv(&mut self, a: &Self::Matrix, x: Self::Vector, y: Self::Vector) -> Result<()>;
    fn residual(&mut self, a: &Self::Matrix, x: Self::Vector, b: Self::Vector, r: Self::Vector) -> Result<()>;
    fn axpy(&mut self, alpha: T, x: Self::Vector, y: Self::Vector) -> Result<()>;
    fn scal(&mut self, alpha: T, x: Self::Vector) -> Result<()>;
    fn copy(&mut self, src: Self::Vector, dst: Self::Vector) -> Result<()>;
    fn dot(&mut self, x: Self::Vector, y: Self::Vector) -> Result<T>;
    fn nrm2(&mut self, x: Self::Vector) -> Result<T>;
    fn jacobi_sweep(&mut self, a: &Self::Matrix, b: Self::Vector, x_old: Self::Vector, x_new: Self::Vector) -> Result<()>;
    fn gauss_seidel_sweep(&mut self, a: &Self::Matrix, b: Self::Vector, x: Self::Vector) -> Result<()>;
}

/// Runs every operation as kernels on a [`Runtime`].
pub struct DeviceBackend<'rt> {
    rt: &'rt Runtime,
    owned: Vec<DeviceBuffer>,
}

impl<'rt> DeviceBackend<'rt> {
    pub fn new(rt: &'rt Runtime) -> Self {
        DeviceBackend { rt, owned: Vec::new() }
    }
}

impl<T: Scalar> Backend<T> for DeviceBackend<'_> {
    type Vector = DeviceBuffer;
    type Matrix = DeviceCsr<T>;

    fn workers(&self) -> usize {
        self.rt.worker_count()
    }

    fn alloc_matrix(&mut self, n_rows: usize, n_cols: usize, nnz: usize) -> Result<DeviceCsr<T>> {
        DeviceCsr::alloc(self.rt, n_rows, n_cols, nnz)
    }

    fn alloc_vector(&mut self, n: usize) -> Result<DeviceBuffer> {
        let buf = self.rt.device().alloc::<T>(n)?;
        self.owned.push(buf);
        Ok(buf)
    }

    fn copy_matrix_in(&mut self, src: &CsrMatrix<T>, dst: &mut DeviceCsr<T>) -> Result<()> {
        dst.copy_in(self.rt, src)
    }

    fn copy_in(&mut self, src: &[T], dst: DeviceBuffer) -> Result<()> {
        self.rt.device().copy_host_to_device(src, &dst)
    }

    fn copy_out(&mut self, src: DeviceBuffer, dst: &mut [T]) -> Result<()> {
        self.rt.device().copy_device_to_host(&src, dst)
    }

    fn layout(&mut self, n: usize) -> Option<LaunchConfig> {
        Some(LaunchConfig::linear(n))
    }

    fn release(&mut self, matrix: Option<DeviceCsr<T>>) -> Result<()> {
        let mut first_err = matrix.map_or(Ok(()), |m| m.free(self.rt));
        for buf in self.owned.drain(..) {
            let freed = self.rt.device().free(buf);
            if first_err.is_ok() {
                first_err = freed;
            }
        }
        first_err
    }

    fn spmv(&mut self, a: &DeviceCsr<T>, x: DeviceBuffer, y: DeviceBuffer) -> Result<()> {
        kernels::csr_spmv_into(self.rt, a, &x, &y)
    }

    fn residual(&mut self, a: &DeviceCsr<T>, x: DeviceBuffer, b: DeviceBuffer, r: DeviceBuffer) -> Result<()> {
        kernels::residual_into(self.rt, a, &x, &b, &r)
    }

    fn axpy(&mut self, alpha: T, x: DeviceBuffer, y: DeviceBuffer) -> Result<()> {
        kernels::axpy(self.rt, alpha, &x, &y)
    }

    fn scal(&mut self, alpha: T, x: DeviceBuffer) -> Result<()> {
        kernels::scal(self.rt, alpha, &x)
    }

    fn copy(&mut self, src: DeviceBuffer, dst: DeviceBuffer) -> Result<()> {
        kernels::copy::<T>(self.rt, &src, &dst)
    }

    fn dot(&mut self, x: DeviceBuffer, y: DeviceBuffer) -> Result<T> {
        kernels::dot(self.rt, &x, &y)
    }

    fn nrm2(&mut self, x: DeviceBuffer) -> Result<T> {
        kernels::nrm2(self.rt, &x)
    }

    fn jacobi_sweep(&mut self, a: &DeviceCsr<T>, b: DeviceBuffer, x_old: DeviceBuffer, x_new: DeviceBuffer) -> Result<()> {
        kernels::jacobi_sweep_into(self.rt, a, &b, &x_old, &x_new)
    }

    fn gauss_seidel_sweep(&mut self, a: &DeviceCsr<T>, b: DeviceBuffer, x: DeviceBuffer) -> Result<()> {
        kernels::gauss_seidel_sweep(self.rt, a, &b, &x)
    }
}

/// Sequential host execution; vectors are indices into an owned arena.
pub struct HostBackend<T> {
    vectors: Vec<Vec<T>>,
}

impl<T: Scalar> Default for HostBackend<T> {
    fn default() -> Self {
        HostBackend { vectors: Vec::new() }
    }
}

impl<T: Scalar> HostBackend<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `f` with the output vector detached from the arena. The output
    /// must not alias an input; an aliased input reads as empty and fails the
    /// length checks.
    fn with_out<R>(&mut self, out: usize, f: impl FnOnce(&[Vec<T>], &mut [T]) -> R) -> R {
        let mut taken = std::mem::take(&mut self.vectors[out]);
        let r = f(&self.vectors, &mut taken);
        self.vectors[out] = taken;
        r
    }
}

impl<T: Scalar> Backend<T> for HostBackend<T> {
    type Vector = usize;
    type Matrix = CsrMatrix<T>;

    fn workers(&self) -> usize {
        1
    }

    fn alloc_matrix(&mut self, n_rows: usize, n_cols: usize, _nnz: usize) -> Result<CsrMatrix<T>> {
        Ok(CsrMatrix::zeros(n_rows, n_cols))
    }

    fn alloc_vector(&mut self, n: usize) -> Result<usize> {
        self.vectors.push(vec![T::zero(); n]);
        Ok(self.vectors.len() - 1)
    }

    fn copy_matrix_in(&mut self, src: &CsrMatrix<T>, dst: &mut CsrMatrix<T>) -> Result<()> {
        if (src.n_rows(), src.n_cols()) != (dst.n_rows(), dst.n_cols()) {
            return Err(Error::DimensionMismatch("matrix shape changed between alloc and copy".into()));
        }
        *dst = src.clone();
        Ok(())
    }

    fn copy_in(&mut self, src: &[T], dst: usize) -> Result<()> {
        let d = &mut self.vectors[dst];
        if d.len() != src.len() {
            return Err(Error::LengthMismatch {
                expected: d.len(),
                found: src.len(),
            });
        }
        d.copy_from_slice(src);
        Ok(())
    }

    fn copy_out(&mut self, src: usize, dst: &mut [T]) -> Result<()> {
        let s = &self.vectors[src];
        if s.len() != dst.len() {
            return Err(Error::LengthMismatch {
                expected: s.len(),
                found: dst.len(),
            });
        }
        dst.copy_from_slice(s);
        Ok(())
    }

    fn layout(&mut self, _n: usize) -> Option<LaunchConfig> {
        None
    }

    fn release(&mut self, _matrix: Option<CsrMatrix<T>>) -> Result<()> {
        self.vectors.clear();
        Ok(())
    }

    fn spmv(&mut self, a: &CsrMatrix<T>, x: usize, y: usize) -> Result<()> {
        self.with_out(y, |v, y| reference::spmv(a, &v[x], y))
    }

    fn residual(&mut self, a: &CsrMatrix<T>, x: usize, b: usize, r: usize) -> Result<()> {
        self.with_out(r, |v, r| reference::residual(a, &v[x], &v[b], r))
    }

    fn axpy(&mut self, alpha: T, x: usize, y: usize) -> Result<()> {
        self.with_out(y, |v, y| reference::axpy(alpha, &v[x], y))
    }

    fn scal(&mut self, alpha: T, x: usize) -> Result<()> {
        self.vectors[x].iter_mut().for_each(|v| *v = alpha * *v);
        Ok(())
    }

    fn copy(&mut self, src: usize, dst: usize) -> Result<()> {
        self.with_out(dst, |v, d| {
            if v[src].len() != d.len() {
                return Err(Error::LengthMismatch {
                    expected: d.len(),
                    found: v[src].len(),
                });
            }
            d.copy_from_slice(&v[src]);
            Ok(())
        })
    }

    fn dot(&mut self, x: usize, y: usize) -> Result<T> {
        reference::dot(&self.vectors[x], &self.vectors[y])
    }

    fn nrm2(&mut self, x: usize) -> Result<T> {
        Ok(reference::nrm2(&self.vectors[x]))
    }

    fn jacobi_sweep(&mut self, a: &CsrMatrix<T>, b: usize, x_old: usize, x_new: usize) -> Result<()> {
        self.with_out(x_new, |v, new| reference::jacobi_sweep(a, &v[b], &v[x_old], new))
    }

    fn gauss_seidel_sweep(&mut self, a: &CsrMatrix<T>, b: usize, x: usize) -> Result<()> {
        self.with_out(x, |v, x| reference::gauss_seidel_sweep(a, &v[b], x))
    }
}
