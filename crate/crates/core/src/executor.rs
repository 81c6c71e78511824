//! Kernel launches over a grid of thread blocks.
//!
//! A [`Kernel`] is an ordered list of phases. Every thread of a block runs
//! phase `k` before any thread of that block starts phase `k + 1`, which is
//! how block-wide barriers are expressed. Blocks are the unit of scheduling:
//! a pool of workers pulls block indices from a shared queue in row-major
//! order, and each worker runs all threads of its block as a loop.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::device::{cells_of, Device, DeviceBuffer, Storage};
use crate::error::{Error, Result};
use crate::scalar::{DeviceElem, ElemKind};

/// Maximum number of threads in one block.
pub const MAX_THREADS_PER_BLOCK: usize = 1024;
/// Default per-block shared memory: 48 KiB.
pub const DEFAULT_SHARED_LIMIT_BYTES: usize = 48 * 1024;
/// Threads per block used by the 1D default geometry.
pub const DEFAULT_BLOCK_SIZE: usize = 256;
/// Environment variable consulted by [`Executor::from_env`].
pub const WORKERS_ENV: &str = "SIMT_WORKERS";

/// A 1D, 2D or 3D extent or index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Dim3 {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl Dim3 {
    pub const fn new(x: usize, y: usize, z: usize) -> Self {
        Dim3 { x, y, z }
    }

    /// A 1D extent (`y = z = 1`).
    pub const fn x(x: usize) -> Self {
        Dim3 { x, y: 1, z: 1 }
    }

    /// A 2D extent (`z = 1`).
    pub const fn xy(x: usize, y: usize) -> Self {
        Dim3 { x, y, z: 1 }
    }

    pub const fn volume(&self) -> usize {
        self.x * self.y * self.z
    }

    fn is_valid_extent(&self) -> bool {
        self.x >= 1 && self.y >= 1 && self.z >= 1
    }

    /// Row-major position of `idx` inside this extent (x fastest).
    #[inline]
    pub const fn linearize(&self, idx: Dim3) -> usize {
        (idx.z * self.y + idx.y) * self.x + idx.x
    }

    /// Inverse of [`Dim3::linearize`].
    #[inline]
    pub const fn delinearize(&self, lin: usize) -> Dim3 {
        Dim3 {
            x: lin % self.x,
            y: (lin / self.x) % self.y,
            z: lin / (self.x * self.y),
        }
    }
}

impl From<usize> for Dim3 {
    fn from(x: usize) -> Self {
        Dim3::x(x)
    }
}

impl From<(usize, usize, usize)> for Dim3 {
    fn from((x, y, z): (usize, usize, usize)) -> Self {
        Dim3 { x, y, z }
    }
}

/// Geometry of one launch.
///
/// The shared-memory element type is the kernel's `S` parameter, so the byte
/// size checked against the limit is `shared_elems * S::KIND.width()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaunchConfig {
    pub grid: Dim3,
    pub block: Dim3,
    pub shared_elems: usize,
}

impl LaunchConfig {
    pub fn new(grid: impl Into<Dim3>, block: impl Into<Dim3>) -> Self {
        LaunchConfig {
            grid: grid.into(),
            block: block.into(),
            shared_elems: 0,
        }
    }

    pub fn with_shared(mut self, elems: usize) -> Self {
        self.shared_elems = elems;
        self
    }

    /// 1D geometry covering `n` elements with `block_size` threads per block.
    pub fn linear_with(n: usize, block_size: usize) -> Self {
        let blocks = n.div_ceil(block_size.max(1)).max(1);
        LaunchConfig::new(Dim3::x(blocks), Dim3::x(block_size))
    }

    /// 1D geometry with the default block size.
    pub fn linear(n: usize) -> Self {
        LaunchConfig::linear_with(n, DEFAULT_BLOCK_SIZE)
    }

    /// Total number of logical threads.
    pub fn total_threads(&self) -> usize {
        self.grid.volume() * self.block.volume()
    }
}

/// Identity of one logical thread within a launch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThreadCtx {
    pub thread_idx: Dim3,
    pub block_idx: Dim3,
    pub block_dim: Dim3,
    pub grid_dim: Dim3,
}

impl ThreadCtx {
    /// Row-major thread position within its block.
    #[inline]
    pub fn thread_linear_id(&self) -> usize {
        self.block_dim.linearize(self.thread_idx)
    }

    /// Row-major block position within the grid.
    #[inline]
    pub fn block_linear_id(&self) -> usize {
        self.grid_dim.linearize(self.block_idx)
    }

    #[inline]
    pub fn global_linear_id(&self) -> usize {
        global_linear_id(self)
    }

    /// `block_idx.x * block_dim.x + thread_idx.x`.
    #[inline]
    pub fn global_x(&self) -> usize {
        self.block_idx.x * self.block_dim.x + self.thread_idx.x
    }

    #[inline]
    pub fn global_y(&self) -> usize {
        self.block_idx.y * self.block_dim.y + self.thread_idx.y
    }

    /// Work-item id within its work-group (same as `thread_idx`).
    pub fn local_id(&self) -> Dim3 {
        self.thread_idx
    }

    /// Work-group id (same as `block_idx`).
    pub fn group_id(&self) -> Dim3 {
        self.block_idx
    }

    /// Work-group size (same as `block_dim`).
    pub fn local_size(&self) -> Dim3 {
        self.block_dim
    }

    /// Number of work-groups in the ND-range (same as `grid_dim`).
    pub fn num_groups(&self) -> Dim3 {
        self.grid_dim
    }

    /// Flattened work-item id (same as [`ThreadCtx::global_linear_id`]).
    pub fn global_id(&self) -> usize {
        global_linear_id(self)
    }
}

/// Flattens a thread identity to a unique id in `0..grid.volume() * block.volume()`.
#[inline]
pub fn global_linear_id(ctx: &ThreadCtx) -> usize {
    let block = ctx.grid_dim.linearize(ctx.block_idx);
    let thread = ctx.block_dim.linearize(ctx.thread_idx);
    block * ctx.block_dim.volume() + thread
}

type Phase<'k, S> = Box<dyn Fn(&mut ThreadScope<'_, S>) + Send + Sync + 'k>;

/// A phase-structured kernel with `S`-typed shared scratch.
pub struct Kernel<'k, S: DeviceElem = f64> {
    name: String,
    params: Vec<ElemKind>,
    phases: Vec<Phase<'k, S>>,
}

impl<S: DeviceElem> fmt::Debug for Kernel<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("phases", &self.phases.len())
            .finish()
    }
}

impl<'k, S: DeviceElem> Kernel<'k, S> {
    /// Starts a kernel taking buffer arguments of the given kinds.
    pub fn new(name: impl Into<String>, params: &[ElemKind]) -> Self {
        Kernel {
            name: name.into(),
            params: params.to_vec(),
            phases: Vec::new(),
        }
    }

    /// Appends a phase; an implicit block barrier separates consecutive phases.
    pub fn phase<F>(mut self, f: F) -> Self
    where
        F: Fn(&mut ThreadScope<'_, S>) + Send + Sync + 'k,
    {
        self.phases.push(Box::new(f));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phase_count(&self) -> usize {
        self.phases.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Access {
    block: usize,
    thread: usize,
    phase: usize,
}

impl Access {
    /// Two accesses are unordered unless they come from the same thread, or
    /// from the same block in different phases.
    fn unordered_with(&self, other: &Access) -> bool {
        let same_thread = self.block == other.block && self.thread == other.thread;
        let barrier_between = self.block == other.block && self.phase != other.phase;
        !same_thread && !barrier_between
    }
}

#[derive(Default)]
struct History {
    reads: Vec<Access>,
    writes: Vec<Access>,
}

/// Per-location access history used by the debug race checker.
#[derive(Default)]
struct AccessLog {
    locations: Mutex<HashMap<(u64, usize), History>>,
    race: Mutex<Option<String>>,
}

const SHARED_SPACE: u64 = u64::MAX;

impl AccessLog {
    fn record(&self, space: u64, index: usize, acc: Access, write: bool) {
        let mut map = self.locations.lock().unwrap_or_else(|e| e.into_inner());
        let hist = map.entry((space, index)).or_default();
        let conflict = hist
            .writes
            .iter()
            .chain(if write { hist.reads.iter() } else { [].iter() })
            .find(|prior| prior.unordered_with(&acc))
            .copied();
        if let Some(prior) = conflict {
            let mut race = self.race.lock().unwrap_or_else(|e| e.into_inner());
            if race.is_none() {
                let location = if space == SHARED_SPACE {
                    format!("shared[{index}]")
                } else {
                    format!("buffer #{space}[{index}]")
                };
                *race = Some(format!(
                    "{} of {location} by thread {} of block {} (phase {}) conflicts with thread {} of block {} (phase {})",
                    if write { "write" } else { "read" },
                    acc.thread,
                    acc.block,
                    acc.phase,
                    prior.thread,
                    prior.block,
                    prior.phase,
                ));
            }
        }
        let list = if write {
            &mut hist.writes
        } else {
            &mut hist.reads
        };
        if list.last() != Some(&acc) {
            list.push(acc);
        }
    }

    fn take_race(&self) -> Option<String> {
        self.race.lock().unwrap_or_else(|e| e.into_inner()).take()
    }
}

struct ResolvedArg {
    buf: DeviceBuffer,
    storage: Storage,
}

/// What a phase closure sees: its thread identity, the launch's global
/// buffers and the block's shared scratch.
pub struct ThreadScope<'a, S: DeviceElem> {
    ctx: ThreadCtx,
    access: Access,
    args: &'a [ResolvedArg],
    shared: &'a mut [S],
    global_log: Option<&'a AccessLog>,
    shared_log: Option<&'a AccessLog>,
}

impl<'a, S: DeviceElem> ThreadScope<'a, S> {
    #[inline]
    pub fn ctx(&self) -> &ThreadCtx {
        &self.ctx
    }

    /// Index of the phase being executed.
    pub fn phase(&self) -> usize {
        self.access.phase
    }

    /// View of buffer argument `arg` as elements of type `E`.
    ///
    /// Panics if `E` does not match the kind declared for that parameter.
    #[inline]
    pub fn global<E: DeviceElem>(&self, arg: usize) -> Global<'_, E> {
        let a = &self.args[arg];
        assert_eq!(
            a.buf.kind(),
            E::KIND,
            "kernel argument {arg} viewed with the wrong element type"
        );
        Global {
            cells: cells_of::<E>(&a.storage),
            id: a.buf.id(),
            log: self.global_log.map(|log| (log, self.access)),
        }
    }

    pub fn shared_len(&self) -> usize {
        self.shared.len()
    }

    #[inline]
    pub fn shared_get(&self, i: usize) -> S {
        if let Some(log) = self.shared_log {
            log.record(SHARED_SPACE, i, self.access, false);
        }
        self.shared[i]
    }

    #[inline]
    pub fn shared_set(&mut self, i: usize, v: S) {
        if let Some(log) = self.shared_log {
            log.record(SHARED_SPACE, i, self.access, true);
        }
        self.shared[i] = v;
    }
}

/// A typed view of one global buffer inside a kernel.
pub struct Global<'a, E: DeviceElem> {
    cells: &'a [E::Cell],
    id: u64,
    log: Option<(&'a AccessLog, Access)>,
}

impl<E: DeviceElem> Global<'_, E> {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> E {
        if let Some((log, acc)) = self.log {
            log.record(self.id, i, acc, false);
        }
        E::load(&self.cells[i])
    }

    #[inline]
    pub fn set(&self, i: usize, v: E) {
        if let Some((log, acc)) = self.log {
            log.record(self.id, i, acc, true);
        }
        E::store(&self.cells[i], v)
    }
}

/// Runs kernels on a pool of simulated cores.
pub struct Executor {
    workers: usize,
    pool: Option<rayon::ThreadPool>,
    shared_limit_bytes: usize,
    race_check: bool,
    entry: Mutex<()>,
}

impl fmt::Debug for Executor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Executor")
            .field("workers", &self.workers)
            .field("shared_limit_bytes", &self.shared_limit_bytes)
            .field("race_check", &self.race_check)
            .finish()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Executor::new(1)
    }
}

fn build_pool(workers: usize) -> Option<rayon::ThreadPool> {
    (workers > 1).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("simt-worker-{i}"))
            .build()
            .expect("failed to spawn executor workers")
    })
}

impl Executor {
    /// Creates an executor with `workers` simulated cores.
    ///
    /// Panics if `workers` is zero.
    pub fn new(workers: usize) -> Self {
        assert!(workers >= 1, "worker count must be positive");
        Executor {
            workers,
            pool: build_pool(workers),
            shared_limit_bytes: DEFAULT_SHARED_LIMIT_BYTES,
            race_check: false,
            entry: Mutex::new(()),
        }
    }

    /// Worker count from `SIMT_WORKERS`, falling back to 1.
    pub fn from_env() -> Self {
        let workers = std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&p| p >= 1)
            .unwrap_or(1);
        Executor::new(workers)
    }

    pub fn worker_count(&self) -> usize {
        self.workers
    }

    /// Changes the number of workers used by subsequent launches.
    ///
    /// Panics if `workers` is zero.
    pub fn set_worker_count(&mut self, workers: usize) {
        assert!(workers >= 1, "worker count must be positive");
        if workers != self.workers {
            self.workers = workers;
            self.pool = build_pool(workers);
        }
    }

    pub fn shared_limit_bytes(&self) -> usize {
        self.shared_limit_bytes
    }

    pub fn set_shared_limit_bytes(&mut self, bytes: usize) {
        self.shared_limit_bytes = bytes;
    }

    /// Turns the debug race checker on or off.
    pub fn set_race_check(&mut self, on: bool) {
        self.race_check = on;
    }

    pub fn race_check(&self) -> bool {
        self.race_check
    }

    fn validate<S: DeviceElem>(&self, kernel: &Kernel<'_, S>, cfg: &LaunchConfig) -> Result<()> {
        for d in [cfg.grid, cfg.block] {
            if !d.is_valid_extent() {
                return Err(Error::InvalidExtent([d.x, d.y, d.z]));
            }
        }
        let threads = cfg.block.volume();
        if threads > MAX_THREADS_PER_BLOCK {
            return Err(Error::BlockTooLarge {
                threads,
                max: MAX_THREADS_PER_BLOCK,
            });
        }
        let bytes = cfg.shared_elems.saturating_mul(S::KIND.width());
        if bytes > self.shared_limit_bytes {
            return Err(Error::SharedMemoryExceeded {
                bytes,
                limit: self.shared_limit_bytes,
            });
        }
        if kernel.phases.is_empty() {
            return Err(Error::EmptyKernel(kernel.name.clone()));
        }
        Ok(())
    }

    fn resolve<S: DeviceElem>(
        &self,
        device: &Device,
        kernel: &Kernel<'_, S>,
        args: &[DeviceBuffer],
    ) -> Result<Vec<ResolvedArg>> {
        if args.len() != kernel.params.len() {
            return Err(Error::ArgCount {
                kernel: kernel.name.clone(),
                expected: kernel.params.len(),
                found: args.len(),
            });
        }
        args.iter()
            .zip(&kernel.params)
            .map(|(buf, &want)| {
                let (kind, storage) = device.storage(buf)?;
                if kind != want {
                    return Err(Error::KindMismatch {
                        expected: want,
                        found: kind,
                    });
                }
                Ok(ResolvedArg { buf: *buf, storage })
            })
            .collect()
    }

    /// Runs `kernel` over the launch domain described by `cfg`.
    ///
    /// Scalar arguments are captured by the phase closures; `args` lists the
    /// device buffers in the order declared by [`Kernel::new`].
    pub fn launch<S: DeviceElem>(
        &self,
        device: &Device,
        kernel: &Kernel<'_, S>,
        cfg: &LaunchConfig,
        args: &[DeviceBuffer],
    ) -> Result<()> {
        self.validate(kernel, cfg)?;
        let resolved = self.resolve(device, kernel, args)?;
        let _entry = self.entry.lock().unwrap_or_else(|e| e.into_inner());

        let global_log = self.race_check.then(AccessLog::default);
        let n_blocks = cfg.grid.volume();
        let run_block = |block_lin: usize| {
            let shared_log = self.race_check.then(AccessLog::default);
            self.run_block(kernel, cfg, &resolved, block_lin, global_log.as_ref(), shared_log.as_ref());
            if let (Some(shared), Some(global)) = (&shared_log, &global_log) {
                if let Some(race) = shared.take_race() {
                    let mut slot = global.race.lock().unwrap_or_else(|e| e.into_inner());
                    slot.get_or_insert(race);
                }
            }
        };

        match &self.pool {
            Some(pool) if n_blocks > 1 => {
                let next = AtomicUsize::new(0);
                pool.broadcast(|_| loop {
                    let b = next.fetch_add(1, Ordering::Relaxed);
                    if b >= n_blocks {
                        break;
                    }
                    run_block(b);
                });
            }
            _ => (0..n_blocks).for_each(run_block),
        }

        if let Some(detail) = global_log.and_then(|log| log.take_race()) {
            return Err(Error::DataRace {
                kernel: kernel.name.clone(),
                detail,
            });
        }
        Ok(())
    }

    fn run_block<S: DeviceElem>(
        &self,
        kernel: &Kernel<'_, S>,
        cfg: &LaunchConfig,
        args: &[ResolvedArg],
        block_lin: usize,
        global_log: Option<&AccessLog>,
        shared_log: Option<&AccessLog>,
    ) {
        let mut shared = vec![S::default(); cfg.shared_elems];
        let block_idx = cfg.grid.delinearize(block_lin);
        let threads = cfg.block.volume();
        for (phase_no, phase) in kernel.phases.iter().enumerate() {
            for t in 0..threads {
                let mut scope = ThreadScope {
                    ctx: ThreadCtx {
                        thread_idx: cfg.block.delinearize(t),
                        block_idx,
                        block_dim: cfg.block,
                        grid_dim: cfg.grid,
                    },
                    access: Access {
                        block: block_lin,
                        thread: t,
                        phase: phase_no,
                    },
                    args,
                    shared: &mut shared,
                    global_log,
                    shared_log,
                };
                phase(&mut scope);
            }
        }
    }

    /// Alias of [`Executor::launch`] in OpenCL vocabulary.
    pub fn enqueue_nd_range_kernel<S: DeviceElem>(
        &self,
        device: &Device,
        kernel: &Kernel<'_, S>,
        cfg: &LaunchConfig,
        args: &[DeviceBuffer],
    ) -> Result<()> {
        self.launch(device, kernel, cfg, args)
    }
}
