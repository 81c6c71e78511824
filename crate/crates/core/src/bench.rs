//! Scaling benchmarks: the simulator at several worker counts against the
//! plain sequential reference, reported as CSV.
//!
//! Timed regions cover copy-in, kernel execution and copy-back; host-side
//! allocation and initialisation are excluded. Each wall time is the median
//! of the requested repetitions.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::kernels::{self, DeviceMatrix};
use crate::matrix::gen;
use crate::matrix::{CsrMatrix, DenseMatrix};
use crate::reference;
use crate::scalar::{ElemKind, Scalar};
use crate::solvers::{self, Method, SolverConfig};
use crate::Runtime;

pub const CSV_HEADER: [&str; 7] = ["workload", "method", "n", "kind", "workers", "wall_seconds", "speedup"];

/// Prefix marking rows measured with the sequential reference implementation.
pub const REFERENCE_PREFIX: &str = "seq-";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub workload: String,
    pub method: String,
    pub n: usize,
    pub kind: ElemKind,
    pub workers: usize,
    pub wall_seconds: f64,
    /// `T(p = 1) / T(p)`.
    pub speedup: f64,
}

impl BenchRecord {
    pub fn is_reference(&self) -> bool {
        self.method.starts_with(REFERENCE_PREFIX)
    }

    fn fields(&self) -> [String; 7] {
        [
            self.workload.clone(),
            self.method.clone(),
            self.n.to_string(),
            self.kind.to_string(),
            self.workers.to_string(),
            self.wall_seconds.to_string(),
            self.speedup.to_string(),
        ]
    }
}

/// What to measure.
#[derive(Debug, Clone)]
pub enum Workload<T> {
    /// `C <- A B` on random dense `n x n` inputs.
    Gemm { n: usize },
    /// Iterative solves of `A x = b` with a seeded random `b`.
    Solve { id: String, matrix: CsrMatrix<T> },
}

impl<T: Scalar> Workload<T> {
    pub fn poisson(k: usize) -> Self {
        Workload::Solve {
            id: format!("poisson{k}"),
            matrix: gen::gen_poisson(k),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Workload::Gemm { n } => format!("gemm{n}"),
            Workload::Solve { id, .. } => id.clone(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Workload::Gemm { n } => *n,
            Workload::Solve { matrix, .. } => matrix.n_rows(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchSpec<T> {
    pub workload: Workload<T>,
    /// Solver methods; ignored for GEMM.
    pub methods: Vec<Method>,
    pub workers: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: Option<usize>,
    /// Also time the sequential reference (`seq-` rows).
    pub include_reference: bool,
}

impl<T: Scalar> BenchSpec<T> {
    pub fn new(workload: Workload<T>) -> Self {
        BenchSpec {
            workload,
            methods: vec![Method::Cg],
            workers: vec![1],
            reps: 3,
            seed: gen::DEFAULT_SEED,
            tol: solvers::DEFAULT_TOL,
            max_iter: None,
            include_reference: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.workers.is_empty() {
            return Err(Error::InvalidArgument("worker list is empty".into()));
        }
        if let Some(&p) = self.workers.iter().find(|&&p| p == 0) {
            return Err(Error::InvalidArgument(format!("worker count must be at least 1, got {p}")));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
        }
        if matches!(self.workload, Workload::Solve { .. }) && self.methods.is_empty() {
            return Err(Error::InvalidArgument("method list is empty".into()));
        }
        Ok(())
    }
}

/// Median; the mean of the two middle values for even counts.
pub fn median(samples: &[Duration]) -> Duration {
    assert!(!samples.is_empty(), "median of no samples");
    let mut s = samples.to_vec();
    s.sort();
    let mid = s.len() / 2;
    if s.len() % 2 == 1 {
        s[mid]
    } else {
        (s[mid - 1] + s[mid]) / 2
    }
}

fn seconds(d: Duration) -> f64 {
    // Keeps wall_seconds strictly positive even on a coarse clock.
    d.as_secs_f64().max(1e-9)
}

fn repeat(reps: usize, mut f: impl FnMut() -> Result<Duration>) -> Result<f64> {
    let samples = (0..reps).map(|_| f()).collect::<Result<Vec<_>>>()?;
    Ok(seconds(median(&samples)))
}

/// One device GEMM: copy-in, kernel and copy-back are timed.
fn time_gemm<T: Scalar>(rt: &Runtime, a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<Duration> {
    let n = a.rows();
    let (da, db, dc) = (
        DeviceMatrix::<T>::alloc(rt, n, n)?,
        DeviceMatrix::<T>::alloc(rt, n, n)?,
        DeviceMatrix::<T>::alloc(rt, n, n)?,
    );
    let start = Instant::now();
    let run = (|| {
        da.copy_in(rt, a)?;
        db.copy_in(rt, b)?;
        kernels::gemm(rt, T::one(), &da, &db, T::zero(), &dc)?;
        dc.download(rt)
    })();
    let elapsed = start.elapsed();
    for m in [da, db, dc] {
        m.free(rt)?;
    }
    run.map(|_| elapsed)
}

fn time_gemm_reference<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<Duration> {
    let mut c = DenseMatrix::zeros(a.rows(), b.cols());
    let start = Instant::now();
    reference::gemm(T::one(), a, b, T::zero(), &mut c)?;
    Ok(start.elapsed())
}

/// Runs the benchmark and returns one record per (method, worker count),
/// plus one `seq-` record per method when the reference is included.
pub fn run_bench<T: Scalar>(spec: &BenchSpec<T>) -> Result<Vec<BenchRecord>> {
    spec.validate()?;
    let workload = spec.workload.id();
    let n = spec.workload.size();

    let mut records = Vec::new();
    let mut emit = |method: String, workers: usize, wall: f64, base: f64| {
        records.push(BenchRecord {
            workload: workload.clone(),
            method,
            n,
            kind: T::KIND,
            workers,
            wall_seconds: wall,
            speedup: base / wall,
        });
    };

    // The simulator is measured at p = 1 even when it is not listed, since
    // it is the denominator of every speedup.
    let sweep = |time_at: &mut dyn FnMut(&Runtime) -> Result<f64>, method: &str, emit: &mut dyn FnMut(String, usize, f64, f64)| -> Result<()> {
        let mut rt = Runtime::new(1);
        let t1 = time_at(&rt)?;
        for &p in &spec.workers {
            let t = if p == 1 {
                t1
            } else {
                rt.set_worker_count(p);
                time_at(&rt)?
            };
            emit(method.to_string(), p, t, t1);
        }
        Ok(())
    };

    match &spec.workload {
        Workload::Gemm { n } => {
            let a = gen::random_dense::<T>(*n, *n, -1.0, 1.0, spec.seed);
            let b = gen::random_dense::<T>(*n, *n, -1.0, 1.0, spec.seed.wrapping_add(1));
            sweep(&mut |rt| repeat(spec.reps, || time_gemm(rt, &a, &b)), "gemm", &mut emit)?;
            if spec.include_reference {
                let t = repeat(spec.reps, || time_gemm_reference(&a, &b))?;
                emit(format!("{REFERENCE_PREFIX}gemm"), 1, t, t);
            }
        }
        Workload::Solve { matrix, .. } => {
            let rhs = gen::random_vector::<T>(n, -1.0, 1.0, spec.seed);
            for &method in &spec.methods {
                let cfg = SolverConfig {
                    method,
                    tol: spec.tol,
                    max_iter: spec.max_iter,
                };
                let mut time_device = |rt: &Runtime| {
                    repeat(spec.reps, || Ok(solvers::solve(rt, matrix, &rhs, &cfg)?.1.timings.device_side()))
                };
                sweep(&mut time_device, method.name(), &mut emit)?;
                if spec.include_reference {
                    let t = repeat(spec.reps, || {
                        Ok(solvers::solve_reference(matrix, &rhs, &cfg)?.1.timings.device_side())
                    })?;
                    emit(format!("{REFERENCE_PREFIX}{}", method.name()), 1, t, t);
                }
            }
        }
    }
    Ok(records)
}

/// Writes the fixed header and one row per record.
pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Free-text description of the benchmarking host.
pub fn host_metadata() -> String {
    let cores = std::thread::available_parallelism().map_or(0, |n| n.get());
    format!(
        "os={} arch={} available_parallelism={cores}",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}
