mod common;

use std::time::Instant;

use common::probes::*;
use simt_core::{scalar::bit_identical, Dim3, ElemKind, Error, Executor, Kernel, LaunchConfig, Runtime};

#[test]
fn partner_read_sees_phase_one_writes_for_all_shapes() {
    for p in [1, 3, 8] {
        let rt = Runtime::new(p);
        for grid in [Dim3::new(1, 1, 1), Dim3::new(3, 2, 1), Dim3::new(8, 8, 2)] {
            for block in [Dim3::new(1, 1, 1), Dim3::new(7, 1, 1), Dim3::new(16, 8, 2)] {
                assert_eq!(run_partner(&rt, grid, block), partner_expected(grid, block), "p={p} {grid:?} {block:?}");
            }
        }
    }
}

#[test]
fn launch_domain_is_enumerated_exactly_once() {
    let rt = Runtime::new(4);
    for grid in [Dim3::new(2, 2, 1), Dim3::new(5, 3, 2), Dim3::new(8, 8, 2)] {
        for block in [Dim3::new(2, 2, 1), Dim3::new(3, 5, 2), Dim3::new(16, 8, 2)] {
            let total = grid.volume() * block.volume();
            let (v, count) = run_iota(&rt, grid, block);
            assert_eq!(count, total);
            let mut seen = vec![false; total];
            for x in v {
                let i = x as usize;
                assert!(!seen[i]);
                seen[i] = true;
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }
}

#[test]
fn grid_two_by_three_iota() {
    let rt = Runtime::new(2);
    let (v, count) = run_iota(&rt, Dim3::x(2), Dim3::x(3));
    assert_eq!(v, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    assert_eq!(count, 6);
}

#[test]
fn block_size_limit_is_1024() {
    let rt = Runtime::new(1);
    let out = rt.device().alloc::<f64>(4 * 1025).unwrap();
    let k = partner_kernel();
    let too_big = LaunchConfig::new(Dim3::x(4), Dim3::x(1025)).with_shared(1025);
    assert!(matches!(rt.launch(&k, &too_big, &[out]), Err(Error::BlockTooLarge { threads: 1025, .. })));
    let ok = LaunchConfig::new(Dim3::x(4), Dim3::x(1024)).with_shared(1024);
    rt.launch(&k, &ok, &[out]).unwrap();
    let three_d = LaunchConfig::new(Dim3::x(1), Dim3::new(16, 8, 8)).with_shared(1024);
    rt.launch(&k, &three_d, &[out]).unwrap();
}

#[test]
fn shared_limit_enforced_in_bytes() {
    let mut ex = Executor::new(1);
    ex.set_shared_limit_bytes(64);
    let rt = Runtime::with_parts(Default::default(), ex);
    let out = rt.device().alloc::<f64>(9).unwrap();
    let k = partner_kernel();
    rt.launch(&k, &LaunchConfig::new(1, 8).with_shared(8), &[out]).unwrap();
    assert!(matches!(
        rt.launch(&k, &LaunchConfig::new(1, 9).with_shared(9), &[out]),
        Err(Error::SharedMemoryExceeded { bytes: 72, limit: 64 })
    ));
}

#[test]
fn freed_argument_is_rejected() {
    let rt = Runtime::new(2);
    let out = rt.device().alloc::<f64>(6).unwrap();
    rt.device().free(out).unwrap();
    let count = Default::default();
    assert!(matches!(
        rt.launch(&iota_kernel(&count), &LaunchConfig::new(2, 3), &[out]),
        Err(Error::UseAfterFree { .. })
    ));
}

#[test]
fn race_checker_on_partner_kernel_is_clean() {
    let mut ex = Executor::new(4);
    ex.set_race_check(true);
    let rt = Runtime::with_parts(Default::default(), ex);
    let (grid, block) = (Dim3::new(4, 2, 1), Dim3::new(8, 4, 1));
    assert_eq!(run_partner(&rt, grid, block), partner_expected(grid, block));

    // Same data flow without the barrier is a race.
    let racy = Kernel::<f64>::new("racy-partner", &[ElemKind::F64]).phase(|t| {
        let tid = t.ctx().thread_linear_id();
        t.shared_set(tid, tid as f64);
        let v = t.shared_get(t.ctx().block_dim.volume() - 1 - tid);
        t.global::<f64>(0).set(t.ctx().global_linear_id(), v);
    });
    let out = rt.device().alloc::<f64>(grid.volume() * block.volume()).unwrap();
    let cfg = LaunchConfig::new(grid, block).with_shared(block.volume());
    assert!(matches!(rt.launch(&racy, &cfg, &[out]), Err(Error::DataRace { .. })));
}

#[test]
fn results_identical_across_worker_counts() {
    let (grid, block) = (Dim3::new(8, 8, 2), Dim3::new(16, 8, 2));
    let base = run_partner(&Runtime::new(1), grid, block);
    let busy = |p| {
        let rt = Runtime::new(p);
        let out = rt.device().alloc::<f64>(64 * 256).unwrap();
        rt.launch(&busy_kernel(50), &LaunchConfig::new(64, 256), &[out]).unwrap();
        rt.device().download::<f64>(&out).unwrap()
    };
    let busy1 = busy(1);
    for p in [2, 4, 8] {
        assert!(bit_identical(&run_partner(&Runtime::new(p), grid, block), &base));
        assert!(bit_identical(&busy(p), &busy1));
    }
}

#[test]
fn more_workers_finish_a_compute_bound_launch_sooner() {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if cores < 2 {
        eprintln!("precondition not met: {cores} core(s) available, timing comparison skipped");
        return;
    }
    let time = |p| {
        let rt = Runtime::new(p);
        let out = rt.device().alloc::<f64>(64 * 256).unwrap();
        let k = busy_kernel(400);
        let cfg = LaunchConfig::new(64, 256);
        rt.launch(&k, &cfg, &[out]).unwrap();
        let start = Instant::now();
        for _ in 0..3 {
            rt.launch(&k, &cfg, &[out]).unwrap();
        }
        start.elapsed()
    };
    let (t1, t4) = (time(1), time(4));
    assert!(t4 < t1, "p=4 took {t4:?}, p=1 took {t1:?}");
}

#[test]
fn opencl_vocabulary_is_an_alias() {
    use simt_core::opencl::NdRange;
    let rt = Runtime::new(2);
    let out = rt.device().create_buffer::<f64>(6).unwrap();
    let count = Default::default();
    let range: NdRange = LaunchConfig::new(2, 3);
    rt.executor().enqueue_nd_range_kernel(rt.device(), &iota_kernel(&count), &range, &[out]).unwrap();
    let mut host = vec![0.0; 6];
    rt.device().enqueue_read_buffer(&out, &mut host).unwrap();
    assert_eq!(host, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
}
