//! Periodic (cyclic) tridiagonal solves by Thomas elimination with a
//! Sherman–Morrison correction for the two corner entries.

use num_complex::Complex64;

/// Row `j` reads `lower[j]·x[j-1] + diag[j]·x[j] + upper[j]·x[j+1] = r[j]`
/// with indices taken modulo `n`. The matrix must be diagonally dominant;
/// no pivoting is done.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    lower: Vec<Complex64>,
    // modified forward-sweep coefficients of the non-cyclic part
    c_prime: Vec<Complex64>,
    inv_denom: Vec<Complex64>,
    // corner data
    beta: Complex64,
    gamma: Complex64,
    z: Vec<Complex64>,
    z_factor: Complex64,
}

impl CyclicTridiagonal {
    pub fn new(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64]) -> Self {
        let n = diag.len();
        assert!(n >= 3 && lower.len() == n && upper.len() == n, "cyclic tridiagonal systems need n >= 3");
        let beta = lower[0];
        let alpha = upper[n - 1];
        let gamma = -diag[0];
        let mut b = diag.to_vec();
        b[0] -= gamma;
        b[n - 1] -= alpha * beta / gamma;
        let mut c_prime = vec![Complex64::default(); n];
        let mut inv_denom = vec![Complex64::default(); n];
        let mut prev = Complex64::default();
        for j in 0..n {
            let denom = b[j] - if j > 0 { lower[j] * prev } else { Complex64::default() };
            inv_denom[j] = denom.inv();
            prev = if j + 1 < n { upper[j] * inv_denom[j] } else { Complex64::default() };
            c_prime[j] = prev;
        }
        let mut out = Self {
            lower: lower.to_vec(),
            c_prime,
            inv_denom,
            beta,
            gamma,
            z: Vec::new(),
            z_factor: Complex64::default(),
        };
        let mut u = vec![Complex64::default(); n];
        u[0] = gamma;
        u[n - 1] = alpha;
        out.thomas(&mut u);
        out.z_factor = (Complex64::new(1.0, 0.0) + u[0] + beta * u[n - 1] / gamma).inv();
        out.z = u;
        out
    }

    pub fn len(&self) -> usize {
        self.inv_denom.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_denom.is_empty()
    }

    fn thomas(&self, x: &mut [Complex64]) {
        let n = x.len();
        x[0] *= self.inv_denom[0];
        for j in 1..n {
            x[j] = (x[j] - self.lower[j] * x[j - 1]) * self.inv_denom[j];
        }
        for j in (0..n - 1).rev() {
            let next = x[j + 1];
            x[j] -= self.c_prime[j] * next;
        }
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) {
        assert_eq!(rhs.len(), self.len());
        self.thomas(rhs);
        let n = rhs.len();
        let fact = (rhs[0] + self.beta * rhs[n - 1] / self.gamma) * self.z_factor;
        for (x, z) in rhs.iter_mut().zip(&self.z) {
            *x -= fact * z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_random_dominant_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [3, 4, 17, 64] {
            let mut r = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let lower: Vec<_> = (0..n).map(|_| r()).collect();
            let upper: Vec<_> = (0..n).map(|_| r()).collect();
            let diag: Vec<_> = (0..n).map(|j| r() + c(3.0, 1.0) * (lower[j].norm() + upper[j].norm() + 0.5)).collect();
            let x: Vec<_> = (0..n).map(|_| r()).collect();
            let mut b: Vec<_> = (0..n)
                .map(|j| lower[j] * x[(j + n - 1) % n] + diag[j] * x[j] + upper[j] * x[(j + 1) % n])
                .collect();
            let sys = CyclicTridiagonal::new(&lower, &diag, &upper);
            sys.solve_in_place(&mut b);
            for (a, e) in b.iter().zip(&x) {
                assert!((a - e).norm() < 1e-12, "n={n}");
            }
        }
    }
}
