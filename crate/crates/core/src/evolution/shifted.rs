//! Lanczos–Galerkin solves of `(I - iτL) x = b` for Hermitian `L`.
//!
//! The Krylov basis is built from `L` alone with the Hermitian inner
//! product. The projected matrix `I - iτT` (with `T` real symmetric
//! tridiagonal) has eigenvalues of modulus at least one, so its LDLᵀ
//! recurrence never breaks down, unlike bilinear-form methods on
//! isotropic data such as plane waves.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_RESTARTS: usize = 8;

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `(I - iτL) x = b` from the initial guess in `x` and returns the
/// number of Lanczos steps. Convergence means a true relative residual
/// `‖b - (I - iτL)x‖ ≤ tol·‖b‖`.
pub fn shifted_solve(
    apply_l: impl Fn(&[Complex64], &mut [Complex64]),
    tau: f64,
    b: &[Complex64],
    x: &mut [Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = Complex64::default());
        return Ok(0);
    }
    let shift = Complex64::new(0.0, -tau);
    let mut lv = vec![Complex64::default(); n];
    let residual_of = |x: &[Complex64], scratch: &mut [Complex64]| -> Vec<Complex64> {
        apply_l(x, scratch);
        b.iter().zip(x).zip(scratch.iter()).map(|((b, x), l)| b - (x + shift * l)).collect()
    };
    let mut total = 0;
    let mut r = residual_of(x, &mut lv);
    for _ in 0..=MAX_RESTARTS {
        let beta1 = norm(&r);
        if beta1 <= tol * b_norm {
            return Ok(total);
        }
        let mut v_prev = vec![Complex64::default(); n];
        let mut v: Vec<Complex64> = r.iter().map(|c| c / beta1).collect();
        let mut p = vec![Complex64::default(); n];
        let (mut beta, mut eta, mut zeta) = (0.0f64, Complex64::default(), Complex64::new(beta1, 0.0));
        let mut estimate = beta1;
        while total < max_iter {
            total += 1;
            apply_l(&v, &mut lv);
            let mut w: Vec<Complex64> = lv.iter().zip(&v_prev).map(|(l, p)| l - p * beta).collect();
            let alpha: f64 = w.iter().zip(&v).map(|(w, v)| (v.conj() * w).re).sum();
            let h = Complex64::new(1.0, 0.0) + shift * alpha;
            let e = shift * beta;
            if eta != Complex64::default() {
                let lambda = e / eta;
                zeta = -lambda * zeta;
                eta = h - lambda * e;
            } else {
                eta = h;
            }
            for j in 0..n {
                p[j] = (v[j] - e * p[j]) / eta;
                x[j] += zeta * p[j];
            }
            for (w, v) in w.iter_mut().zip(&v) {
                *w -= v * alpha;
            }
            let beta_next = norm(&w);
            estimate = tau * beta_next * (zeta / eta).norm();
            if estimate <= 0.5 * tol * b_norm || beta_next == 0.0 {
                break;
            }
            v_prev = std::mem::replace(&mut v, w.iter().map(|c| c / beta_next).collect());
            beta = beta_next;
        }
        r = residual_of(x, &mut lv);
        if norm(&r) <= tol * b_norm {
            return Ok(total);
        }
        if total >= max_iter {
            return Err(Error::NoConvergence { iterations: total, residual: norm(&r) / b_norm });
        }
        log::debug!("restarting shifted Lanczos: estimate {estimate:e}, true residual {:e}", norm(&r) / b_norm);
    }
    Err(Error::NoConvergence { iterations: total, residual: norm(&r) / b_norm })
}
