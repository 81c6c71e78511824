mod common;

use common::*;
use proptest::prelude::*;
use simt_core::kernels::{self, DeviceCsr, DeviceMatrix};
use simt_core::matrix::gen;
use simt_core::{scalar::bit_identical, CsrMatrix, DenseMatrix, Runtime};

const WORKERS: [usize; 4] = [1, 2, 4, 8];

fn spmv_on(rt: &Runtime, a: &CsrMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let da = DeviceCsr::upload(rt, a).unwrap();
    let dx = rt.device().upload(x).unwrap();
    let dy = kernels::csr_spmv(rt, &da, &dx).unwrap();
    let y = rt.device().download(&dy).unwrap();
    da.free(rt).unwrap();
    rt.device().free(dx).unwrap();
    rt.device().free(dy).unwrap();
    y
}

#[test]
fn spmv_matches_dense_oracle_bitwise() {
    let rt = Runtime::new(4);
    let mut rng = XorShift(0x9e37_79b9_7f4a_7c15);
    for _ in 0..20 {
        let a = random_csr(&mut rng, 100, 0.05);
        let x = rng.vec(100);
        let y = spmv_on(&rt, &a, &x);
        let oracle = dense_matvec(&dense_of(&a), &x);
        assert!(bit_identical(&y, &oracle));
    }
    assert_eq!(rt.device().bytes_in_use(), 0);
}

#[test]
fn spmv_special_cases() {
    let rt = Runtime::new(2);
    let x = vec![1.5, -2.0, 3.0];
    assert_eq!(spmv_on(&rt, &CsrMatrix::identity(3), &x), x);
    assert_eq!(spmv_on(&rt, &CsrMatrix::zeros(3, 3), &x), vec![0.0; 3]);
    let da = DeviceCsr::upload(&rt, &CsrMatrix::<f64>::identity(3)).unwrap();
    let short = rt.device().upload(&[1.0f64, 2.0]).unwrap();
    assert!(kernels::csr_spmv(&rt, &da, &short).is_err());
}

#[test]
fn gemm_exact_on_small_integers() {
    let rt = Runtime::new(4);
    let mut rng = XorShift(12345);
    for n in 1..=16 {
        let a: Vec<f64> = (0..n * n).map(|_| rng.int_in(-8, 8) as f64).collect();
        let b: Vec<f64> = (0..n * n).map(|_| rng.int_in(-8, 8) as f64).collect();
        let da = DeviceMatrix::upload(&rt, &DenseMatrix::new(n, n, a.clone()).unwrap()).unwrap();
        let db = DeviceMatrix::upload(&rt, &DenseMatrix::new(n, n, b.clone()).unwrap()).unwrap();
        let dc = DeviceMatrix::<f64>::alloc(&rt, n, n).unwrap();
        kernels::gemm(&rt, 1.0, &da, &db, 0.0, &dc).unwrap();
        assert_eq!(dc.download(&rt).unwrap().data(), triple_loop(&a, &b, n).as_slice(), "n={n}");
    }
}

#[test]
fn gemm_identity_and_beta() {
    let rt = Runtime::new(2);
    let b = gen::random_dense::<f64>(20, 20, -1.0, 1.0, 1);
    let di = DeviceMatrix::upload(&rt, &DenseMatrix::identity(20)).unwrap();
    let db = DeviceMatrix::upload(&rt, &b).unwrap();
    let dc = DeviceMatrix::upload(&rt, &gen::random_dense::<f64>(20, 20, -1.0, 1.0, 2)).unwrap();
    kernels::gemm(&rt, 1.0, &di, &db, 0.0, &dc).unwrap();
    assert_eq!(dc.download(&rt).unwrap(), b);
    let before = dc.download(&rt).unwrap();
    kernels::gemm(&rt, 0.0, &di, &db, 1.0, &dc).unwrap();
    assert_eq!(dc.download(&rt).unwrap(), before);
}

#[test]
fn dot_within_tolerance_of_sequential_sum() {
    let rt = Runtime::new(4);
    let mut rng = XorShift(77);
    for n in [1, 255, 256, 257, 1000, 4099] {
        let (x, y) = (rng.vec(n), rng.vec(n));
        let dx = rt.device().upload(&x).unwrap();
        let dy = rt.device().upload(&y).unwrap();
        let d: f64 = kernels::dot(&rt, &dx, &dy).unwrap();
        let s = seq_dot(&x, &y);
        assert!((d - s).abs() <= 1e-12 * s.abs().max(1e-300), "n={n}: {d} vs {s}");
        let nrm: f64 = kernels::nrm2(&rt, &dx).unwrap();
        let sn = seq_dot(&x, &x).sqrt();
        assert!((nrm - sn).abs() <= 1e-12 * sn);
    }
}

#[test]
fn dot_and_nrm2_edge_cases() {
    let rt = Runtime::new(1);
    let ones = rt.device().upload(&[1.0f64; 4]).unwrap();
    assert_eq!(kernels::dot::<f64>(&rt, &ones, &ones).unwrap(), 4.0);
    let e1 = rt.device().upload(&[1.0f64, 0.0, 0.0]).unwrap();
    let e2 = rt.device().upload(&[0.0f64, 1.0, 0.0]).unwrap();
    assert_eq!(kernels::dot::<f64>(&rt, &e1, &e2).unwrap(), 0.0);
    assert_eq!(kernels::nrm2::<f64>(&rt, &e1).unwrap(), 1.0);
    let z = rt.device().alloc::<f64>(9).unwrap();
    assert_eq!(kernels::nrm2::<f64>(&rt, &z).unwrap(), 0.0);
    let empty = rt.device().alloc::<f64>(0).unwrap();
    assert_eq!(kernels::dot::<f64>(&rt, &empty, &empty).unwrap(), 0.0);
}

#[test]
fn axpy_matches_sequential_loop() {
    let rt = Runtime::new(4);
    let mut rng = XorShift(5);
    let (x, y) = (rng.vec(10_000), rng.vec(10_000));
    let alpha = 0.731;
    let dx = rt.device().upload(&x).unwrap();
    let dy = rt.device().upload(&y).unwrap();
    kernels::axpy(&rt, alpha, &dx, &dy).unwrap();
    let oracle: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + b).collect();
    assert!(bit_identical(&rt.device().download::<f64>(&dy).unwrap(), &oracle));
    assert_eq!(rt.device().download::<f64>(&dx).unwrap(), x);
}

#[test]
fn jacobi_sweep_examples() {
    let rt = Runtime::new(1);
    let b = [3.0, -1.0, 2.0];
    let di = DeviceCsr::upload(&rt, &CsrMatrix::<f64>::identity(3)).unwrap();
    let db = rt.device().upload(&b).unwrap();
    let x0 = rt.device().alloc::<f64>(3).unwrap();
    let x1 = kernels::jacobi_sweep(&rt, &di, &db, &x0).unwrap();
    assert_eq!(rt.device().download::<f64>(&x1).unwrap(), b);

    let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]).unwrap();
    let da = DeviceCsr::upload(&rt, &a).unwrap();
    let db = rt.device().upload(&[1.0f64, 2.0]).unwrap();
    let x0 = rt.device().alloc::<f64>(2).unwrap();
    let x1 = kernels::jacobi_sweep(&rt, &da, &db, &x0).unwrap();
    let got = rt.device().download::<f64>(&x1).unwrap();
    assert_eq!(got[0], 0.25);
    assert!((got[1] - 2.0 / 3.0).abs() < 1e-15);
}

fn kernel_outputs(p: usize) -> Vec<Vec<f64>> {
    let rt = Runtime::new(p);
    let mut rng = XorShift(2024);
    let n = 3000;
    let (x, y) = (rng.vec(n), rng.vec(n));
    let a = gen::random_sparse::<f64>(n, n, 0.002, 3);
    let dx = rt.device().upload(&x).unwrap();
    let dy = rt.device().upload(&y).unwrap();
    let mut out = Vec::new();
    kernels::axpy(&rt, 1.25, &dx, &dy).unwrap();
    out.push(rt.device().download(&dy).unwrap());
    out.push(vec![kernels::dot::<f64>(&rt, &dx, &dy).unwrap(), kernels::nrm2::<f64>(&rt, &dy).unwrap()]);
    let da = DeviceCsr::upload(&rt, &a).unwrap();
    let ys = kernels::csr_spmv(&rt, &da, &dx).unwrap();
    out.push(rt.device().download(&ys).unwrap());
    let ga = gen::random_dense::<f64>(40, 33, -1.0, 1.0, 8);
    let gb = gen::random_dense::<f64>(33, 29, -1.0, 1.0, 9);
    let (dga, dgb) = (DeviceMatrix::upload(&rt, &ga).unwrap(), DeviceMatrix::upload(&rt, &gb).unwrap());
    let dgc = DeviceMatrix::upload(&rt, &gen::random_dense::<f64>(40, 29, -1.0, 1.0, 10)).unwrap();
    kernels::gemm(&rt, 0.5, &dga, &dgb, -2.0, &dgc).unwrap();
    out.push(dgc.download(&rt).unwrap().into_data());
    let dd = gen::diagonally_dominant::<f64>(500, 0.01, 4);
    let ddev = DeviceCsr::upload(&rt, &dd).unwrap();
    let db = rt.device().upload(&x[..500]).unwrap();
    let x0 = rt.device().upload(&y[..500]).unwrap();
    let xj = kernels::jacobi_sweep(&rt, &ddev, &db, &x0).unwrap();
    out.push(rt.device().download(&xj).unwrap());
    kernels::gauss_seidel_sweep(&rt, &ddev, &db, &x0).unwrap();
    out.push(rt.device().download(&x0).unwrap());
    out
}

#[test]
fn every_kernel_is_worker_count_invariant() {
    let base = kernel_outputs(1);
    for p in &WORKERS[1..] {
        let other = kernel_outputs(*p);
        for (i, (a, b)) in base.iter().zip(&other).enumerate() {
            assert!(bit_identical(a, b), "kernel output {i} differs at p={p}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spmv_bit_identical_to_dense(n in 1usize..40, density in 0.0f64..0.6, seed in any::<u64>()) {
        let mut rng = XorShift(seed | 1);
        let a = random_csr(&mut rng, n, density);
        let x = rng.vec(n);
        let rt = Runtime::new(3);
        prop_assert!(bit_identical(&spmv_on(&rt, &a, &x), &dense_matvec(&dense_of(&a), &x)));
    }

    #[test]
    fn dot_close_to_sequential(v in prop::collection::vec(-1.0e3f64..1.0e3, 0..2000)) {
        let rt = Runtime::new(2);
        let w: Vec<f64> = v.iter().map(|x| x * 0.5 + 1.0).collect();
        let dv = rt.device().upload(&v).unwrap();
        let dw = rt.device().upload(&w).unwrap();
        let d: f64 = kernels::dot(&rt, &dv, &dw).unwrap();
        let s = seq_dot(&v, &w);
        let scale: f64 = v.iter().zip(&w).map(|(a, b)| (a * b).abs()).sum();
        prop_assert!((d - s).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn gemm_matches_triple_loop_on_integers(n in 1usize..=16, seed in any::<u64>()) {
        let mut rng = XorShift(seed | 1);
        let a: Vec<f64> = (0..n * n).map(|_| rng.int_in(-8, 8) as f64).collect();
        let b: Vec<f64> = (0..n * n).map(|_| rng.int_in(-8, 8) as f64).collect();
        let rt = Runtime::new(2);
        let da = DeviceMatrix::upload(&rt, &DenseMatrix::new(n, n, a.clone()).unwrap()).unwrap();
        let db = DeviceMatrix::upload(&rt, &DenseMatrix::new(n, n, b.clone()).unwrap()).unwrap();
        let dc = DeviceMatrix::<f64>::alloc(&rt, n, n).unwrap();
        kernels::gemm(&rt, 1.0, &da, &db, 0.0, &dc).unwrap();
        prop_assert_eq!(dc.download(&rt).unwrap().into_data(), triple_loop(&a, &b, n));
    }

    #[test]
    fn poisson_always_valid_and_symmetric(k in 1usize..12) {
        let a = gen::gen_poisson::<f64>(k);
        prop_assert_eq!(a.n_rows(), k * k);
        prop_assert_eq!(a.nnz(), k * k + 4 * k * (k - 1));
        prop_assert!(a.is_symmetric());
        prop_assert!(CsrMatrix::new(a.n_rows(), a.n_cols(), a.row_ptr().to_vec(), a.col_idx().to_vec(), a.vals().to_vec()).is_ok());
        prop_assert_eq!(dense_of(&a), poisson_dense(k));
    }
}
