//! Structural checks of the operator and the evolution.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coefficients::RegularizedCoefficient;
use crate::error::{Error, Result};
use crate::evolution::{time_derivative_data, CrankNicolson, SpatialOperator, StepperConfig};
use crate::grid::{ComplexField, Grid};

/// Worst cases over a batch of random field pairs, all relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorCheck {
    pub samples: usize,
    /// `|⟨Lu,v⟩ - ⟨u,Lv⟩| / (‖Lu‖‖v‖ + ‖u‖‖Lv‖)`.
    pub asymmetry: f64,
    /// `max(Re⟨Lu,u⟩, 0) / ‖u‖²`.
    pub positive_part: f64,
    /// `|Im⟨Lu,u⟩| / (‖Lu‖‖u‖)`.
    pub imaginary_part: f64,
    /// Summation by parts, relative to `‖Lu‖‖v‖`.
    pub summation_by_parts: f64,
    /// `max |L 1|`.
    pub constant_residual: f64,
}

pub fn random_field(grid: Grid, rng: &mut impl Rng) -> ComplexField {
    let values = (0..grid.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    ComplexField::new(grid, values).expect("finite samples")
}

/// `-h^d Σ_axes Σ_j g_{j+1/2} D⁺u_j conj(D⁺v_j)`, which equals `⟨Lu, v⟩`.
pub fn summed_by_parts(op: &SpatialOperator, u: &ComplexField, v: &ComplexField) -> Complex64 {
    let grid = op.grid();
    let (a, b) = (u.values(), v.values());
    let mut total = Complex64::default();
    for axis in 0..grid.dim() {
        for (j, face) in op.faces(axis).iter().enumerate() {
            let k = grid.neighbor(j, axis, true);
            total += (a[k] - a[j]) * (b[k] - b[j]).conj() * *face;
        }
    }
    -total * grid.cell_volume()
}

/// Runs the operator checks on `samples` seeded random pairs.
pub fn check_operator(op: &SpatialOperator, samples: usize, seed: u64) -> Result<OperatorCheck> {
    let grid = *op.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = OperatorCheck {
        samples,
        asymmetry: 0.0,
        positive_part: 0.0,
        imaginary_part: 0.0,
        summation_by_parts: 0.0,
        constant_residual: 0.0,
    };
    for _ in 0..samples {
        let u = random_field(grid, &mut rng);
        let v = random_field(grid, &mut rng);
        let (lu, lv) = (op.apply(&u), op.apply(&v));
        let a = lu.inner(&v)?;
        let b = u.inner(&lv)?;
        let scale = lu.l2_norm() * v.l2_norm() + u.l2_norm() * lv.l2_norm();
        out.asymmetry = out.asymmetry.max((a - b).norm() / scale);
        let q = lu.inner(&u)?;
        out.positive_part = out.positive_part.max(q.re.max(0.0) / u.l2_norm().powi(2));
        out.imaginary_part = out.imaginary_part.max(q.im.abs() / (lu.l2_norm() * u.l2_norm()));
        let sbp = (summed_by_parts(op, &u, &v) - a).norm() / (lu.l2_norm() * v.l2_norm());
        out.summation_by_parts = out.summation_by_parts.max(sbp);
    }
    let one = ComplexField::from_fn(grid, |_| Complex64::new(1.0, 0.0));
    out.constant_residual = op.apply(&one).max_abs();
    Ok(out)
}

/// `sup_t ‖u(t)‖_{H²} / ((1 + ‖g‖_{W^{1,∞}}) ‖u₀‖_{H²})` for one solve.
pub fn h2_bound_ratio(g: &RegularizedCoefficient, u0: &ComplexField, cfg: &StepperConfig) -> Result<f64> {
    let op = SpatialOperator::assemble(g, Default::default());
    let trace = crate::evolution::solve_homogeneous(&op, u0, &cfg.with_stride(0))?;
    Ok(trace.sup_h2() / ((1.0 + g.w1inf()) * u0.h2_norm()))
}

/// Relative gap between the evolution `w` of `i L u₀` and the centered
/// difference `(u_{m+1} - u_{m-1}) / 2dt`, at step `m` of a uniform run.
pub fn time_derivative_gap(g: &RegularizedCoefficient, u0: &ComplexField, dt: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Precondition("the centered difference needs m >= 1".into()));
    }
    let op = SpatialOperator::assemble(g, Default::default());
    let mut engine = CrankNicolson::new(&op, StepperConfig::new(dt, dt)?.tolerance);
    let mut w = time_derivative_data(g, u0);
    let mut prev = u0.clone();
    let mut cur = engine.step(&prev, dt)?;
    for _ in 1..m {
        let next = engine.step(&cur, dt)?;
        prev = std::mem::replace(&mut cur, next);
    }
    // now cur = u_m, prev = u_{m-1}
    let next = engine.step(&cur, dt)?;
    for _ in 0..m {
        w = engine.step(&w, dt)?;
    }
    let centered = (&next - &prev).scale(0.5 / dt);
    Ok((&w - &centered).l2_norm() / w.l2_norm())
}
