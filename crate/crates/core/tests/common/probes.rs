//! Test kernels written directly against the executor API.

use std::sync::atomic::{AtomicUsize, Ordering};

use simt_core::{Dim3, ElemKind, Kernel, LaunchConfig, Runtime};

/// Every thread writes its own global linear id.
pub fn iota_kernel<'k>(count: &'k AtomicUsize) -> Kernel<'k, f64> {
    Kernel::new("iota", &[ElemKind::F64]).phase(move |t| {
        count.fetch_add(1, Ordering::Relaxed);
        let gid = t.ctx().global_linear_id();
        t.global::<f64>(0).set(gid, gid as f64);
    })
}

/// Phase 0 stores a per-thread tag in shared memory; phase 1 reads the
/// partner's tag (mirror position in the block) and writes it out.
pub fn partner_kernel() -> Kernel<'static, f64> {
    Kernel::new("partner", &[ElemKind::F64])
        .phase(|t| {
            let tid = t.ctx().thread_linear_id();
            let tag = (t.ctx().block_linear_id() * 10_000 + tid) as f64;
            t.shared_set(tid, tag);
        })
        .phase(|t| {
            let ctx = *t.ctx();
            let tid = ctx.thread_linear_id();
            let partner = ctx.block_dim.volume() - 1 - tid;
            let v = t.shared_get(partner);
            t.global::<f64>(0).set(ctx.global_linear_id(), v);
        })
}

/// Expected output of [`partner_kernel`], computed from first principles.
pub fn partner_expected(grid: Dim3, block: Dim3) -> Vec<f64> {
    let bv = block.volume();
    (0..grid.volume() * bv)
        .map(|g| {
            let (blk, tid) = (g / bv, g % bv);
            (blk * 10_000 + (bv - 1 - tid)) as f64
        })
        .collect()
}

pub fn run_partner(rt: &Runtime, grid: Dim3, block: Dim3) -> Vec<f64> {
    let out = rt.device().alloc::<f64>(grid.volume() * block.volume()).unwrap();
    let cfg = LaunchConfig::new(grid, block).with_shared(block.volume());
    rt.launch(&partner_kernel(), &cfg, &[out]).unwrap();
    let v = rt.device().download(&out).unwrap();
    rt.device().free(out).unwrap();
    v
}

/// Returns (values, executions) for the iota kernel.
pub fn run_iota(rt: &Runtime, grid: Dim3, block: Dim3) -> (Vec<f64>, usize) {
    let out = rt.device().alloc::<f64>(grid.volume() * block.volume()).unwrap();
    let count = AtomicUsize::new(0);
    rt.launch(&iota_kernel(&count), &LaunchConfig::new(grid, block), &[out]).unwrap();
    let v = rt.device().download(&out).unwrap();
    rt.device().free(out).unwrap();
    (v, count.into_inner())
}

/// A compute-heavy kernel over `blocks` blocks of 256 threads.
pub fn busy_kernel(iters: usize) -> Kernel<'static, f64> {
    Kernel::new("busy", &[ElemKind::F64]).phase(move |t| {
        let gid = t.ctx().global_linear_id();
        let mut acc = gid as f64;
        for i in 0..iters {
            acc = (acc * 1.000_000_1 + i as f64).sqrt();
        }
        t.global::<f64>(0).set(gid, acc);
    })
}
