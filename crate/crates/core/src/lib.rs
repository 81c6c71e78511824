//! A host-side simulator of the SIMT kernel execution model.
//!
//! Grids of thread blocks run phase-structured kernels with per-block shared
//! memory and barriers, on a configurable pool of workers, against a device
//! memory space that is only reachable through explicit copies. On top of it
//! sit data-parallel numerical kernels, an iterative linear solver library
//! (Jacobi, Gauss-Seidel, CG, GMRES, BiCGSTAB) and a scaling benchmark
//! harness.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*F32` /
//! `*F64` aliases below name the concrete instantiations.

pub mod bench;
pub mod device;
pub mod error;
pub mod executor;
pub mod kernels;
pub mod matrix;
pub mod reference;
pub mod scalar;
pub mod solvers;
pub mod terminology;

pub use device::{Device, DeviceBuffer, HostBuffer};
pub use error::{Error, Result};
pub use executor::{global_linear_id, Dim3, Executor, Kernel, LaunchConfig, ThreadCtx, ThreadScope};
pub use kernels::{DeviceCsr, DeviceMatrix};
pub use matrix::{CsrMatrix, DenseMatrix};
pub use scalar::{DeviceElem, ElemKind, Scalar};
pub use solvers::{solve, FlowStep, Method, SolverConfig, SolverReport};

pub type CsrMatrixF32 = CsrMatrix<f32>;
pub type CsrMatrixF64 = CsrMatrix<f64>;
pub type DenseMatrixF32 = DenseMatrix<f32>;
pub type DenseMatrixF64 = DenseMatrix<f64>;
pub type DeviceCsrF32 = DeviceCsr<f32>;
pub type DeviceCsrF64 = DeviceCsr<f64>;
pub type DeviceMatrixF32 = DeviceMatrix<f32>;
pub type DeviceMatrixF64 = DeviceMatrix<f64>;

/// OpenCL names for the launch vocabulary.
pub mod opencl {
    /// A work-group extent or id.
    pub type GroupDims = super::Dim3;
    /// An ND-range: work-groups of work-items.
    pub type NdRange = super::LaunchConfig;
    /// Identity of one work-item.
    pub type WorkItem = super::ThreadCtx;
}

/// A simulated device paired with the executor that runs kernels on it.
#[derive(Debug, Default)]
pub struct Runtime {
    device: Device,
    executor: Executor,
}

impl Runtime {
    /// Default 1 GiB device with `workers` simulated cores.
    pub fn new(workers: usize) -> Self {
        Runtime {
            device: Device::new(),
            executor: Executor::new(workers),
        }
    }

    pub fn with_parts(device: Device, executor: Executor) -> Self {
        Runtime { device, executor }
    }

    /// Worker count taken from `SIMT_WORKERS`.
    pub fn from_env() -> Self {
        Runtime::with_parts(Device::new(), Executor::from_env())
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn executor(&self) -> &Executor {
        &self.executor
    }

    pub fn executor_mut(&mut self) -> &mut Executor {
        &mut self.executor
    }

    pub fn set_worker_count(&mut self, workers: usize) {
        self.executor.set_worker_count(workers);
    }

    pub fn worker_count(&self) -> usize {
        self.executor.worker_count()
    }

    pub fn launch<S: DeviceElem>(&self, kernel: &Kernel<'_, S>, cfg: &LaunchConfig, args: &[DeviceBuffer]) -> Result<()> {
        self.executor.launch(&self.device, kernel, cfg, args)
    }
}
