//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerical code; inputs come in as plain triplets or
//! dense arrays. `probes` holds the small test kernels.

#![allow(dead_code)]

pub mod probes;

use simt_core::CsrMatrix;

/// Dense row-major copy of a CSR matrix, built from its raw arrays.
pub fn dense_of(a: &CsrMatrix<f64>) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; a.n_cols()]; a.n_rows()];
    for i in 0..a.n_rows() {
        for k in a.row_ptr()[i]..a.row_ptr()[i + 1] {
            d[i][a.col_idx()[k]] = a.vals()[k];
        }
    }
    d
}

/// Dense matvec with per-row accumulation over all columns in order. Zero
/// entries contribute `+0.0 * x`, which leaves a finite sum unchanged.
pub fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).fold(0.0, |acc, (&v, &xj)| if v == 0.0 { acc } else { acc + v * xj }))
        .collect()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        assert!(m[piv][col].abs() > 1e-300, "singular matrix in oracle");
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (rhs[i] - s) / m[i][i];
    }
    x
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `||x - y||_inf / ||y||_inf`.
pub fn rel_inf_err(x: &[f64], y: &[f64]) -> f64 {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    inf_norm(&diff) / inf_norm(y)
}

/// `||b - A x||_2 / ||b||_2` in binary64 from a dense copy of `A`.
pub fn true_rel_residual(a: &[Vec<f64>], x: &[f64], b: &[f64]) -> f64 {
    let ax = dense_matvec(a, x);
    let num: f64 = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den
}

/// Naive `i, k, j` triple loop for `C = A B`.
pub fn triple_loop(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += a[i * n + j] * b[j * n + k];
            }
            c[i * n + k] = s;
        }
    }
    c
}

/// Sequential sum of products, left to right.
pub fn seq_dot(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += x[i] * y[i];
    }
    s
}

/// Small xorshift generator so oracle-side data does not share the library's RNG path.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    /// Uniform in `[-1, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as i64
    }

    pub fn vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.unit()).collect()
    }
}

/// Random sparse square matrix from triplets with roughly `density` fill.
pub fn random_csr(rng: &mut XorShift, n: usize, density: f64) -> CsrMatrix<f64> {
    let mut trips = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if (rng.next_u64() % 1_000_000) as f64 / 1e6 < density {
                trips.push((i, j, rng.unit()));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, trips).unwrap()
}

/// 5-point Laplacian on a `k x k` grid, written out independently.
pub fn poisson_dense(k: usize) -> Vec<Vec<f64>> {
    let n = k * k;
    let mut a = vec![vec![0.0; n]; n];
    for gy in 0..k {
        for gx in 0..k {
            let i = gy * k + gx;
            a[i][i] = 4.0;
            if gx > 0 {
                a[i][i - 1] = -1.0;
            }
            if gx + 1 < k {
                a[i][i + 1] = -1.0;
            }
            if gy > 0 {
                a[i][i - k] = -1.0;
            }
            if gy + 1 < k {
                a[i][i + k] = -1.0;
            }
        }
    }
    a
}

pub fn csr_from_dense(d: &[Vec<f64>]) -> CsrMatrix<f64> {
    let mut trips = Vec::new();
    for (i, row) in d.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                trips.push((i, j, v));
            }
        }
    }
    CsrMatrix::from_triplets(d.len(), d[0].len(), trips).unwrap()
}
