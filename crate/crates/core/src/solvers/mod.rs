//! Iterative linear solvers: Jacobi, Gauss-Seidel, CG, restarted GMRES and
//! BiCGSTAB.
//!
//! Every solve follows the same host/device flow and records how long each
//! step took: host allocation, host initialisation, device allocation,
//! copy-in, grid layout, kernel iterations, copy-back and clean-up. The
//! initial guess is always zero and the stopping rule is the true relative
//! residual `||b - A x||_2 / ||b||_2 <= tol`.

mod backend;
mod methods;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use backend::{Backend, DeviceBackend, HostBackend};

use crate::error::{Error, Result};
use crate::executor::LaunchConfig;
use crate::matrix::CsrMatrix;
use crate::scalar::{ElemKind, Scalar};
use crate::Runtime;

/// Default relative-residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Default GMRES restart length.
pub const DEFAULT_RESTART: usize = 30;
/// Default iteration cap is this many times the system size.
pub const DEFAULT_MAX_ITER_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Jacobi,
    GaussSeidel,
    Cg,
    /// Restarted GMRES with Krylov basis size `restart`.
    Gmres { restart: usize },
    BiCgStab,
}

impl Method {
    pub const NAMES: [&'static str; 5] = ["jacobi", "gauss-seidel", "cg", "gmres", "bicgstab"];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Jacobi => "jacobi",
            Method::GaussSeidel => "gauss-seidel",
            Method::Cg => "cg",
            Method::Gmres { .. } => "gmres",
            Method::BiCgStab => "bicgstab",
        }
    }

    pub fn gmres() -> Method {
        Method::Gmres {
            restart: DEFAULT_RESTART,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Gmres { restart } => write!(f, "gmres({restart})"),
            m => f.write_str(m.name()),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.to_ascii_lowercase().as_str() {
            "jacobi" => Ok(Method::Jacobi),
            "gauss-seidel" | "gauss_seidel" | "gs" => Ok(Method::GaussSeidel),
            "cg" => Ok(Method::Cg),
            "gmres" => Ok(Method::gmres()),
            "bicgstab" => Ok(Method::BiCgStab),
            _ => Err(Error::InvalidArgument(format!(
                "unknown method `{s}`; expected one of {}",
                Method::NAMES.join(", ")
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Relative residual threshold, > 0.
    pub tol: f64,
    /// Iteration cap; `None` means ten times the system size.
    pub max_iter: Option<usize>,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == Some(0) {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if let Method::Gmres { restart: 0 } = self.method {
            return Err(Error::InvalidArgument("GMRES restart length must be at least 1".into()));
        }
        Ok(())
    }

    fn resolved_max_iter(&self, n: usize) -> usize {
        self.max_iter.unwrap_or((DEFAULT_MAX_ITER_FACTOR * n).max(1))
    }
}

/// The steps of one solve, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlowStep {
    HostAlloc,
    HostInit,
    DeviceAlloc,
    CopyIn,
    GridLayout,
    Execute,
    CopyBack,
    Cleanup,
}

impl FlowStep {
    pub const ALL: [FlowStep; 8] = [
        FlowStep::HostAlloc,
        FlowStep::HostInit,
        FlowStep::DeviceAlloc,
        FlowStep::CopyIn,
        FlowStep::GridLayout,
        FlowStep::Execute,
        FlowStep::CopyBack,
        FlowStep::Cleanup,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            FlowStep::HostAlloc => "host-alloc",
            FlowStep::HostInit => "host-init",
            FlowStep::DeviceAlloc => "device-alloc",
            FlowStep::CopyIn => "copy-in",
            FlowStep::GridLayout => "grid-layout",
            FlowStep::Execute => "execute",
            FlowStep::CopyBack => "copy-back",
            FlowStep::Cleanup => "cleanup",
        }
    }
}

/// Wall time per [`FlowStep`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepTimings([Duration; 8]);

impl StepTimings {
    pub fn get(&self, step: FlowStep) -> Duration {
        self.0[step as usize]
    }

    fn add(&mut self, step: FlowStep, d: Duration) {
        self.0[step as usize] += d;
    }

    pub fn iter(&self) -> impl Iterator<Item = (FlowStep, Duration)> + '_ {
        FlowStep::ALL.iter().map(|&s| (s, self.get(s)))
    }

    pub fn total(&self) -> Duration {
        self.0.iter().sum()
    }

    /// Copy-in through copy-back: the device-side portion of a solve.
    pub fn device_side(&self) -> Duration {
        [FlowStep::CopyIn, FlowStep::GridLayout, FlowStep::Execute, FlowStep::CopyBack]
            .iter()
            .map(|&s| self.get(s))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub method: Method,
    pub kind: ElemKind,
    pub n: usize,
    pub workers: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Relative residuals, starting with the initial guess.
    pub residual_history: Vec<f64>,
    pub timings: StepTimings,
    /// Launch geometry used for vector kernels (device runs only).
    pub layout: Option<LaunchConfig>,
}

impl SolverReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history is never empty")
    }
}

/// Iteration state shared by every method.
pub(crate) struct Progress {
    pub tol: f64,
    pub max_iter: usize,
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Progress {
    /// Records a relative residual; returns `true` once converged.
    pub fn record(&mut self, rel: f64) -> bool {
        self.history.push(rel);
        self.converged = rel <= self.tol;
        self.converged
    }
}

fn timed<R>(timings: &mut StepTimings, step: FlowStep, f: impl FnOnce() -> R) -> R {
    let start = Instant::now();
    let r = f();
    timings.add(step, start.elapsed());
    r
}

/// Solves `A x = b` on the simulated device.
pub fn solve<T: Scalar>(rt: &Runtime, a: &CsrMatrix<T>, b: &[T], cfg: &SolverConfig) -> Result<(Vec<T>, SolverReport)> {
    solve_with(&mut DeviceBackend::new(rt), a, b, cfg)
}

/// Solves `A x = b` with the sequential host reference.
pub fn solve_reference<T: Scalar>(a: &CsrMatrix<T>, b: &[T], cfg: &SolverConfig) -> Result<(Vec<T>, SolverReport)> {
    solve_with(&mut HostBackend::new(), a, b, cfg)
}

pub fn jacobi_iterate<T: Scalar>(rt: &Runtime, a: &CsrMatrix<T>, b: &[T], cfg: &SolverConfig) -> Result<(Vec<T>, SolverReport)> {
    solve(rt, a, b, &SolverConfig { method: Method::Jacobi, ..*cfg })
}

pub fn gauss_seidel_iterate<T: Scalar>(rt: &Runtime, a: &CsrMatrix<T>, b: &[T], cfg: &SolverConfig) -> Result<(Vec<T>, SolverReport)> {
    solve(rt, a, b, &SolverConfig { method: Method::GaussSeidel, ..*cfg })
}

pub fn cg_iterate<T: Scalar>(rt: &Runtime, a: &CsrMatrix<T>, b: &[T], cfg: &SolverConfig) -> Result<(Vec<T>, SolverReport)> {
    solve(rt, a, b, &SolverConfig { method: Method::Cg, ..*cfg })
}

/// Restarted GMRES; keeps the restart length of `cfg` if it already names GMRES.
pub fn gmres_iterate<T: Scalar>(rt: &Runtime, a: &CsrMatrix<T>, b: &[T], cfg: &SolverConfig) -> Result<(Vec<T>, SolverReport)> {
    let method = match cfg.method {
        m @ Method::Gmres { .. } => m,
        _ => Method::gmres(),
    };
    solve(rt, a, b, &SolverConfig { method, ..*cfg })
}

pub fn bicgstab_iterate<T: Scalar>(rt: &Runtime, a: &CsrMatrix<T>, b: &[T], cfg: &SolverConfig) -> Result<(Vec<T>, SolverReport)> {
    solve(rt, a, b, &SolverConfig { method: Method::BiCgStab, ..*cfg })
}

fn workspace_len(method: Method, n: usize) -> usize {
    match method {
        Method::Jacobi => 2,
        Method::GaussSeidel => 1,
        Method::Cg => 4,
        Method::BiCgStab => 7,
        Method::Gmres { restart } => restart.min(n).max(1) + 2,
    }
}

/// Runs the full flow on any backend.
pub fn solve_with<T: Scalar, B: Backend<T>>(
    be: &mut B,
    a: &CsrMatrix<T>,
    b: &[T],
    cfg: &SolverConfig,
) -> Result<(Vec<T>, SolverReport)> {
    cfg.validate()?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, expected square",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let n = a.n_rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} entries for a {n}x{n} system",
            b.len()
        )));
    }
    if cfg.method == Method::Cg && !a.is_symmetric() {
        return Err(Error::NotSymmetric);
    }

    let mut timings = StepTimings::default();

    let (mut x_host, mut b_host) = timed(&mut timings, FlowStep::HostAlloc, || {
        (vec![T::zero(); n], Vec::with_capacity(n))
    });
    timed(&mut timings, FlowStep::HostInit, || {
        b_host.extend_from_slice(b);
        x_host.fill(T::zero());
    });

    let mut matrix = None;
    let outcome = (|| -> Result<(Progress, Option<LaunchConfig>)> {
        let (b_dev, x_dev, ws) = timed(&mut timings, FlowStep::DeviceAlloc, || -> Result<_> {
            matrix = Some(be.alloc_matrix(n, n, a.nnz())?);
            let b_dev = be.alloc_vector(n)?;
            let x_dev = be.alloc_vector(n)?;
            let ws = (0..workspace_len(cfg.method, n))
                .map(|_| be.alloc_vector(n))
                .collect::<Result<Vec<_>>>()?;
            Ok((b_dev, x_dev, ws))
        })?;
        let a_dev = matrix.as_mut().expect("allocated above");
        timed(&mut timings, FlowStep::CopyIn, || -> Result<()> {
            be.copy_matrix_in(a, a_dev)?;
            be.copy_in(&b_host, b_dev)?;
            be.copy_in(&x_host, x_dev)
        })?;
        let layout = timed(&mut timings, FlowStep::GridLayout, || be.layout(n));

        let mut progress = Progress {
            tol: cfg.tol,
            max_iter: cfg.resolved_max_iter(n),
            history: Vec::new(),
            iterations: 0,
            converged: false,
        };
        let a_dev = &*a_dev;
        timed(&mut timings, FlowStep::Execute, || {
            methods::run(be, cfg.method, a_dev, b_dev, x_dev, &ws, &mut progress)
        })?;
        timed(&mut timings, FlowStep::CopyBack, || be.copy_out(x_dev, &mut x_host))?;
        Ok((progress, layout))
    })();

    let released = timed(&mut timings, FlowStep::Cleanup, || be.release(matrix.take()));
    let (progress, layout) = outcome?;
    released?;

    let report = SolverReport {
        method: cfg.method,
        kind: T::KIND,
        n,
        workers: be.workers(),
        converged: progress.converged,
        iterations: progress.iterations,
        residual_history: progress.history,
        timings,
        layout,
    };
    Ok((x_host, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        assert_eq!("CG".parse::<Method>().unwrap(), Method::Cg);
        assert_eq!("gmres".parse::<Method>().unwrap(), Method::Gmres { restart: 30 });
        assert_eq!("gauss-seidel".parse::<Method>().unwrap(), Method::GaussSeidel);
        assert!("sor".parse::<Method>().is_err());
        assert_eq!(Method::Gmres { restart: 5 }.to_string(), "gmres(5)");
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(Method::Cg).tol(0.0).validate().is_err());
        assert!(SolverConfig::new(Method::Cg).tol(f64::NAN).validate().is_err());
        assert!(SolverConfig::new(Method::Cg).max_iter(0).validate().is_err());
        assert!(SolverConfig::new(Method::Gmres { restart: 0 }).validate().is_err());
        assert_eq!(SolverConfig::new(Method::Cg).resolved_max_iter(7), 70);
    }

    #[test]
    fn flow_steps_are_ordered() {
        let labels: Vec<_> = FlowStep::ALL.iter().map(FlowStep::label).collect();
        assert_eq!(
            labels,
            ["host-alloc", "host-init", "device-alloc", "copy-in", "grid-layout", "execute", "copy-back", "cleanup"]
        );
    }
}
