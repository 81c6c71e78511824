//! Test-problem generators. All random generators take an explicit seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CsrMatrix, DenseMatrix};
use crate::scalar::Scalar;

/// Default seed for generated data.
pub const DEFAULT_SEED: u64 = 42;

/// The seeded generator behind every random helper here.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 5-point Laplacian on a `k` x `k` grid: 4 on the diagonal, -1 for each
/// grid neighbour. Unknowns are numbered row by row.
pub fn gen_poisson<T: Scalar>(k: usize) -> CsrMatrix<T> {
    stencil_2d(k, [T::from_f64_lossy(4.0), -T::one(), -T::one(), -T::one(), -T::one()])
}

/// Central-difference convection-diffusion on a `k` x `k` grid.
///
/// Diagonal 4; west/east neighbours `-1 - wind_x` / `-1 + wind_x`, south/north
/// neighbours `-1 - wind_y` / `-1 + wind_y`. Nonsymmetric for nonzero wind.
pub fn convection_diffusion<T: Scalar>(k: usize, wind_x: f64, wind_y: f64) -> CsrMatrix<T> {
    let c = T::from_f64_lossy;
    stencil_2d(
        k,
        [c(4.0), c(-1.0 - wind_x), c(-1.0 + wind_x), c(-1.0 - wind_y), c(-1.0 + wind_y)],
    )
}

/// `[centre, west, east, south, north]` weights.
fn stencil_2d<T: Scalar>(k: usize, w: [T; 5]) -> CsrMatrix<T> {
    let n = k * k;
    let mut entries = Vec::with_capacity(5 * n);
    for gy in 0..k {
        for gx in 0..k {
            let i = gy * k + gx;
            if gy > 0 {
                entries.push((i, i - k, w[3]));
            }
            if gx > 0 {
                entries.push((i, i - 1, w[1]));
            }
            entries.push((i, i, w[0]));
            if gx + 1 < k {
                entries.push((i, i + 1, w[2]));
            }
            if gy + 1 < k {
                entries.push((i, i + k, w[4]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, entries).expect("stencil entries are unique")
}

/// Tridiagonal Toeplitz matrix with `diag` on the diagonal and `off` beside it.
pub fn tridiagonal<T: Scalar>(n: usize, diag: f64, off: f64) -> CsrMatrix<T> {
    let (d, o) = (T::from_f64_lossy(diag), T::from_f64_lossy(off));
    let mut entries = Vec::with_capacity(3 * n);
    for i in 0..n {
        if i > 0 {
            entries.push((i, i - 1, o));
        }
        entries.push((i, i, d));
        if i + 1 < n {
            entries.push((i, i + 1, o));
        }
    }
    CsrMatrix::from_triplets(n, n, entries).expect("tridiagonal entries are unique")
}

/// Random sparse matrix: each entry present with probability `density`,
/// values uniform in [-1, 1).
pub fn random_sparse<T: Scalar>(n_rows: usize, n_cols: usize, density: f64, seed: u64) -> CsrMatrix<T> {
    let mut rng = seeded_rng(seed);
    let mut entries = Vec::new();
    for i in 0..n_rows {
        for j in 0..n_cols {
            if rng.gen::<f64>() < density {
                entries.push((i, j, T::from_f64_lossy(rng.gen_range(-1.0..1.0))));
            }
        }
    }
    CsrMatrix::from_triplets(n_rows, n_cols, entries).expect("generated entries are unique")
}

/// Random sparse matrix made strictly diagonally dominant: each diagonal is
/// one more than the absolute sum of its row's off-diagonal entries.
pub fn diagonally_dominant<T: Scalar>(n: usize, density: f64, seed: u64) -> CsrMatrix<T> {
    let mut rng = seeded_rng(seed);
    let mut entries = Vec::new();
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if j != i && rng.gen::<f64>() < density {
                let v: f64 = rng.gen_range(-1.0..1.0);
                row_sum += v.abs();
                entries.push((i, j, T::from_f64_lossy(v)));
            }
        }
        entries.push((i, i, T::from_f64_lossy(row_sum + 1.0)));
    }
    CsrMatrix::from_triplets(n, n, entries).expect("generated entries are unique")
}

/// Vector of uniform values in [lo, hi).
pub fn random_vector<T: Scalar>(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<T> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| T::from_f64_lossy(rng.gen_range(lo..hi))).collect()
}

/// Dense matrix of uniform values in [lo, hi).
pub fn random_dense<T: Scalar>(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64) -> DenseMatrix<T> {
    DenseMatrix::new(rows, cols, random_vector(rows * cols, lo, hi, seed)).expect("sized to fit")
}

/// Dense matrix of integers drawn uniformly from `lo..=hi`.
pub fn random_integer_dense<T: Scalar>(rows: usize, cols: usize, lo: i32, hi: i32, seed: u64) -> DenseMatrix<T> {
    let mut rng = seeded_rng(seed);
    let data = (0..rows * cols)
        .map(|_| T::from_f64_lossy(rng.gen_range(lo..=hi) as f64))
        .collect();
    DenseMatrix::new(rows, cols, data).expect("sized to fit")
}
