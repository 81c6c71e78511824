//! The iteration loops. All vectors are already on the backend and `x`
//! holds the zero initial guess.

use super::backend::Backend;
use super::{Method, Progress};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Operands handed to every method.
struct System<'a, T: Scalar, B: Backend<T>> {
    a: &'a B::Matrix,
    b: B::Vector,
    x: B::Vector,
    b_norm: f64,
}

pub(crate) fn run<T: Scalar, B: Backend<T>>(
    be: &mut B,
    method: Method,
    a: &B::Matrix,
    b: B::Vector,
    x: B::Vector,
    ws: &[B::Vector],
    progress: &mut Progress,
) -> Result<()> {
    let b_norm = be.nrm2(b)?.as_f64();
    if b_norm == 0.0 {
        // x = 0 solves the system exactly.
        progress.record(0.0);
        return Ok(());
    }
    let sys = System::<T, B> { a, b, x, b_norm };
    match method {
        Method::Jacobi => jacobi(be, &sys, ws, progress),
        Method::GaussSeidel => gauss_seidel(be, &sys, ws, progress),
        Method::Cg => cg(be, &sys, ws, progress),
        Method::BiCgStab => bicgstab(be, &sys, ws, progress),
        Method::Gmres { restart } => gmres(be, &sys, restart, ws, progress),
    }
}

/// `||b - A x|| / ||b||`, computed into `r`.
fn true_residual<T: Scalar, B: Backend<T>>(be: &mut B, sys: &System<'_, T, B>, r: B::Vector) -> Result<f64> {
    be.residual(sys.a, sys.x, sys.b, r)?;
    Ok(be.nrm2(r)?.as_f64() / sys.b_norm)
}

fn breakdown<T: Scalar>(method: &'static str, quantity: &'static str, value: T) -> Error {
    Error::Breakdown {
        method,
        quantity,
        value: value.as_f64(),
    }
}

fn jacobi<T: Scalar, B: Backend<T>>(be: &mut B, sys: &System<'_, T, B>, ws: &[B::Vector], p: &mut Progress) -> Result<()> {
    let (x_new, r) = (ws[0], ws[1]);
    if p.record(true_residual(be, sys, r)?) {
        return Ok(());
    }
    while p.iterations < p.max_iter {
        be.jacobi_sweep(sys.a, sys.b, sys.x, x_new)?;
        be.copy(x_new, sys.x)?;
        p.iterations += 1;
        if p.record(true_residual(be, sys, r)?) {
            break;
        }
    }
    Ok(())
}

fn gauss_seidel<T: Scalar, B: Backend<T>>(be: &mut B, sys: &System<'_, T, B>, ws: &[B::Vector], p: &mut Progress) -> Result<()> {
    let r = ws[0];
    if p.record(true_residual(be, sys, r)?) {
        return Ok(());
    }
    while p.iterations < p.max_iter {
        be.gauss_seidel_sweep(sys.a, sys.b, sys.x)?;
        p.iterations += 1;
        if p.record(true_residual(be, sys, r)?) {
            break;
        }
    }
    Ok(())
}

fn cg<T: Scalar, B: Backend<T>>(be: &mut B, sys: &System<'_, T, B>, ws: &[B::Vector], p: &mut Progress) -> Result<()> {
    let (r, dir, ad, tmp) = (ws[0], ws[1], ws[2], ws[3]);
    if p.record(true_residual(be, sys, r)?) {
        return Ok(());
    }
    be.copy(r, dir)?;
    let mut rr = be.dot(r, r)?;
    let thr = T::breakdown_threshold();
    while p.iterations < p.max_iter {
        be.spmv(sys.a, dir, ad)?;
        let dad = be.dot(dir, ad)?;
        // Also catches NaN.
        if !(dad > thr) {
            return Err(breakdown("cg", "p^T A p", dad));
        }
        let alpha = rr / dad;
        be.axpy(alpha, dir, sys.x)?;
        be.axpy(-alpha, ad, r)?;
        p.iterations += 1;
        if p.record(true_residual(be, sys, tmp)?) {
            break;
        }
        let rr_new = be.dot(r, r)?;
        let beta = rr_new / rr;
        be.scal(beta, dir)?;
        be.axpy(T::one(), r, dir)?;
        rr = rr_new;
    }
    Ok(())
}

fn bicgstab<T: Scalar, B: Backend<T>>(be: &mut B, sys: &System<'_, T, B>, ws: &[B::Vector], p: &mut Progress) -> Result<()> {
    let (r, r_hat, dir, v, s, t, tmp) = (ws[0], ws[1], ws[2], ws[3], ws[4], ws[5], ws[6]);
    if p.record(true_residual(be, sys, r)?) {
        return Ok(());
    }
    be.copy(r, r_hat)?;
    be.copy(r, dir)?;
    let thr = T::breakdown_threshold();
    let mut rho = be.dot(r_hat, r)?;
    while p.iterations < p.max_iter {
        if !(rho.abs() > thr) {
            return Err(breakdown("bicgstab", "rho", rho));
        }
        be.spmv(sys.a, dir, v)?;
        let rv = be.dot(r_hat, v)?;
        if !(rv.abs() > thr) {
            return Err(breakdown("bicgstab", "r_hat^T v", rv));
        }
        let alpha = rho / rv;
        be.copy(r, s)?;
        be.axpy(-alpha, v, s)?;
        be.axpy(alpha, dir, sys.x)?;
        p.iterations += 1;

        // Half step already good enough: accept only if the true residual agrees.
        if be.nrm2(s)?.as_f64() / sys.b_norm <= p.tol {
            let rel = true_residual(be, sys, tmp)?;
            if rel <= p.tol {
                p.record(rel);
                break;
            }
        }

        be.spmv(sys.a, s, t)?;
        let tt = be.dot(t, t)?;
        if !(tt > thr) {
            return Err(breakdown("bicgstab", "t^T t", tt));
        }
        let omega = be.dot(t, s)? / tt;
        if !(omega.abs() > thr) {
            return Err(breakdown("bicgstab", "omega", omega));
        }
        be.axpy(omega, s, sys.x)?;
        be.copy(s, r)?;
        be.axpy(-omega, t, r)?;
        if p.record(true_residual(be, sys, tmp)?) {
            break;
        }

        let rho_new = be.dot(r_hat, r)?;
        let beta = (rho_new / rho) * (alpha / omega);
        be.axpy(-omega, v, dir)?;
        be.scal(beta, dir)?;
        be.axpy(T::one(), r, dir)?;
        rho = rho_new;
    }
    Ok(())
}

/// Plane rotation zeroing `b` in `(a, b)`.
fn givens<T: Scalar>(a: T, b: T) -> (T, T) {
    if b == T::zero() {
        (T::one(), T::zero())
    } else {
        let h = a.hypot(b);
        (a / h, b / h)
    }
}

fn gmres<T: Scalar, B: Backend<T>>(
    be: &mut B,
    sys: &System<'_, T, B>,
    restart: usize,
    ws: &[B::Vector],
    p: &mut Progress,
) -> Result<()> {
    // Basis v_0..v_m plus the residual vector.
    let m = ws.len() - 2;
    debug_assert!(m <= restart.max(1));
    let basis = &ws[..=m];
    let r = ws[m + 1];
    let thr = T::breakdown_threshold();

    if p.record(true_residual(be, sys, r)?) {
        return Ok(());
    }
    while p.iterations < p.max_iter {
        // r holds b - A x from the last true-residual evaluation.
        let beta = be.nrm2(r)?;
        be.copy(r, basis[0])?;
        be.scal(T::one() / beta, basis[0])?;

        // h[j] is column j of the Hessenberg matrix, rotated in place.
        let mut h: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut cs = Vec::with_capacity(m);
        let mut sn = Vec::with_capacity(m);
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut k = 0;

        for j in 0..m {
            if p.iterations >= p.max_iter {
                break;
            }
            let w = basis[j + 1];
            be.spmv(sys.a, basis[j], w)?;
            let mut col = vec![T::zero(); j + 2];
            for (i, &vi) in basis[..=j].iter().enumerate() {
                col[i] = be.dot(w, vi)?;
                be.axpy(-col[i], vi, w)?;
            }
            let h_next = be.nrm2(w)?;
            col[j + 1] = h_next;
            // Happy breakdown: the Krylov space is invariant.
            let happy = !(h_next > thr);
            if !happy {
                be.scal(T::one() / h_next, w)?;
            }

            for i in 0..j {
                let (a, b) = (col[i], col[i + 1]);
                col[i] = cs[i] * a + sn[i] * b;
                col[i + 1] = cs[i] * b - sn[i] * a;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = T::zero();
            g[j + 1] = -s * g[j];
            g[j] = c * g[j];
            cs.push(c);
            sn.push(s);
            h.push(col);

            p.iterations += 1;
            k = j + 1;
            let estimate = g[j + 1].abs().as_f64() / sys.b_norm;
            p.history.push(estimate);
            if estimate <= p.tol || happy {
                break;
            }
        }

        // Back substitution on the k x k upper triangle, then x += V y.
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for (l, &yl) in y.iter().enumerate().skip(i + 1) {
                acc = acc - h[l][i] * yl;
            }
            y[i] = acc / h[i][i];
        }
        for (i, &yi) in y.iter().enumerate() {
            be.axpy(yi, basis[i], sys.x)?;
        }

        // The last entry of every cycle is the true residual, not the estimate.
        let rel = true_residual(be, sys, r)?;
        p.history.pop();
        if p.record(rel) {
            break;
        }
    }
    Ok(())
}
