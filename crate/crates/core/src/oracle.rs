//! Independent reference solutions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::coefficients::{regularize, regularize_data, Mollifier, RegularizedCoefficient};
use crate::error::{Error, Result};
use crate::evolution::{solve_homogeneous, SpatialOperator};
use crate::grid::{ComplexField, Grid};
use crate::problem::{Problem, TimeStep};

/// Largest `n^d` the dense reference accepts.
pub const DENSE_LIMIT: usize = 256;
/// Largest refined node count for the fine-grid reference.
pub const FINE_NODE_BUDGET: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Fourier,
    Dense,
    FineGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub field: ComplexField,
    pub method: OracleMethod,
    /// Estimated error of `field` itself, when one is available.
    pub error_estimate: Option<f64>,
    /// Fine grid only: `‖u_coarse - u_fine‖` for the same unmollified problem
    /// on the coarse grid, i.e. the coarse scheme error.
    pub coarse_discrepancy: Option<f64>,
    /// Fine grid only: coarse time step the reference was built for.
    pub dt: Option<f64>,
}

fn fft_axis(values: &mut [Complex64], grid: &Grid, axis: usize, inverse: bool) {
    let n = grid.n();
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    if grid.dim() == 1 {
        fft.process(values);
        return;
    }
    let mut line = vec![Complex64::default(); n];
    for other in 0..n {
        for (k, slot) in line.iter_mut().enumerate() {
            let idx = if axis == 0 { [k, other] } else { [other, k] };
            *slot = values[grid.flat_index(idx)];
        }
        fft.process(&mut line);
        for (k, v) in line.iter().enumerate() {
            let idx = if axis == 0 { [k, other] } else { [other, k] };
            values[grid.flat_index(idx)] = *v;
        }
    }
}

fn wavenumber(grid: &Grid, m: usize) -> f64 {
    let n = grid.n() as isize;
    let m = m as isize;
    let signed = if m <= n / 2 { m } else { m - n };
    std::f64::consts::PI * signed as f64 / grid.half_width()
}

/// Exact periodic solution for `g ≡ c`: each Fourier mode `k` of `u₀` is
/// multiplied by `e^{-i c |k|² t}` (continuum symbol).
pub fn fourier_constant_solution(c: f64, u0: &ComplexField, t: f64) -> Result<OracleResult> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidCoefficient(format!("constant coefficient must be positive, got {c}")));
    }
    let grid = *u0.grid();
    let mut values = u0.values().to_vec();
    for axis in 0..grid.dim() {
        fft_axis(&mut values, &grid, axis, false);
    }
    for (flat, v) in values.iter_mut().enumerate() {
        let idx = grid.multi_index(flat);
        let k2: f64 = (0..grid.dim()).map(|a| wavenumber(&grid, idx[a]).powi(2)).sum();
        *v *= Complex64::from_polar(1.0, -c * k2 * t);
    }
    for axis in 0..grid.dim() {
        fft_axis(&mut values, &grid, axis, true);
    }
    let scale = 1.0 / grid.len() as f64;
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(OracleResult {
        field: ComplexField::new(grid, values)?,
        method: OracleMethod::Fourier,
        error_estimate: Some(0.0),
        coarse_discrepancy: None,
        dt: None,
    })
}

/// Dense matrix of the flux-form operator, built from the coefficient samples
/// without going through [`SpatialOperator`].
fn dense_operator(g: &RegularizedCoefficient) -> DMatrix<f64> {
    let grid = g.grid();
    let (n, dim, len) = (grid.n(), grid.dim(), grid.len());
    let values = g.field().values();
    let h2 = grid.h() * grid.h();
    let mut m = DMatrix::<f64>::zeros(len, len);
    let step = |flat: usize, axis: usize, delta: usize| -> usize {
        let mut idx = [flat / n, flat % n];
        if dim == 1 {
            idx = [flat, 0];
        }
        idx[axis] = (idx[axis] + delta) % n;
        if dim == 1 { idx[0] } else { idx[0] * n + idx[1] }
    };
    for j in 0..len {
        for axis in 0..dim {
            let fwd = step(j, axis, 1);
            let bwd = step(j, axis, n - 1);
            let gp = 0.5 * (values[j] + values[fwd]) / h2;
            let gm = 0.5 * (values[j] + values[bwd]) / h2;
            m[(j, fwd)] += gp;
            m[(j, bwd)] += gm;
            m[(j, j)] -= gp + gm;
        }
    }
    m
}

/// One Crank–Nicolson step by dense LU factorization.
pub fn dense_reference_step(op: &SpatialOperator, u: &ComplexField, dt: f64) -> Result<OracleResult> {
    let len = op.grid().len();
    if len > DENSE_LIMIT {
        return Err(Error::DenseTooLarge { max: DENSE_LIMIT, got: len });
    }
    if u.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    let l = dense_operator(op.coefficient()).map(|v| Complex64::new(v, 0.0));
    let shift = Complex64::new(0.0, 0.5 * dt);
    let id = DMatrix::<Complex64>::identity(len, len);
    let a = &id - &l * shift;
    let b = &id + &l * shift;
    let rhs = b * DVector::from_column_slice(u.values());
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Precondition("dense Crank–Nicolson matrix is singular".into()))?;
    Ok(OracleResult {
        field: ComplexField::new(*u.grid(), x.as_slice().to_vec())?,
        method: OracleMethod::Dense,
        error_estimate: None,
        coarse_discrepancy: None,
        dt: Some(dt),
    })
}

/// Coefficient used by the reference: pointwise samples for regular specs,
/// otherwise the regularization at the problem's scale.
fn reference_coefficient(problem: &Problem, grid: &Grid) -> Result<RegularizedCoefficient> {
    if problem.coefficient.is_regular() {
        return RegularizedCoefficient::sampled(&problem.coefficient, grid);
    }
    let eps = problem.epsilon.ok_or_else(|| {
        Error::Precondition("a singular coefficient needs a regularization scale for its reference".into())
    })?;
    regularize(&problem.coefficient, &Mollifier::new(problem.mollifier), eps, grid)
}

fn reference_data(problem: &Problem, grid: &Grid) -> Result<ComplexField> {
    if let Some(u0) = problem.data.sample(grid) {
        return Ok(u0);
    }
    let eps = problem
        .epsilon
        .ok_or_else(|| Error::Precondition("delta data needs a regularization scale for its reference".into()))?;
    regularize_data(&problem.data, &Mollifier::new(problem.mollifier), eps, grid)
}

/// Re-solves `problem` with `g` (and `u₀`) unmollified where that makes
/// sense, at `refinement`× resolution in space and time, and injects the
/// result onto the coarse grid.
///
/// The coarse step is resolved on the coarse reference operator; the fine
/// solve uses `dt / refinement`.
pub fn fine_grid_reference(problem: &Problem, refinement: usize) -> Result<OracleResult> {
    if ![2, 4].contains(&refinement) {
        return Err(Error::Precondition(format!("refinement must be 2 or 4, got {refinement}")));
    }
    let coarse = problem.grid;
    let fine = coarse.refine(refinement)?;
    if fine.len() > FINE_NODE_BUDGET {
        return Err(Error::BudgetExceeded { needed: fine.len(), budget: FINE_NODE_BUDGET });
    }
    let coarse_op = SpatialOperator::assemble(&reference_coefficient(problem, &coarse)?, problem.mean);
    let coarse_cfg = problem.time.resolve(&coarse_op)?;
    let fine_time = crate::problem::TimeSettings { dt: TimeStep::Fixed(coarse_cfg.dt / refinement as f64), ..problem.time };
    let fine_op = SpatialOperator::assemble(&reference_coefficient(problem, &fine)?, problem.mean);
    let fine_cfg = fine_time.resolve(&fine_op)?.with_stride(0);
    let fine_trace = solve_homogeneous(&fine_op, &reference_data(problem, &fine)?, &fine_cfg)?;
    let field = fine_trace.final_field().inject(coarse)?;
    let coarse_trace = solve_homogeneous(&coarse_op, &reference_data(problem, &coarse)?, &coarse_cfg.with_stride(0))?;
    let discrepancy = (coarse_trace.final_field() - &field).l2_norm();
    let r2 = (refinement * refinement) as f64;
    Ok(OracleResult {
        field,
        method: OracleMethod::FineGrid,
        error_estimate: Some(discrepancy / (r2 - 1.0)),
        coarse_discrepancy: Some(discrepancy),
        dt: Some(coarse_cfg.dt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientSpec, DataSpec, MollifierKind};
    use crate::evolution::{assemble_operator, step_cn, StepperConfig};
    use crate::grid::RealField;
    use crate::problem::TimeSettings;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid) -> ComplexField {
        DataSpec::gaussian(2.0, 0.0, 2.0).sample(&grid).unwrap()
    }

    #[test]
    fn fourier_examples() {
        let grid = Grid::new(1, 4.0, 64).unwrap();
        let u0 = gaussian(grid);
        assert!((&fourier_constant_solution(1.0, &u0, 0.0).unwrap().field - &u0).max_abs() < 1e-14);
        let k = PI * 5.0 / 4.0;
        let mode = ComplexField::from_fn(grid, |x| Complex64::from_polar(1.0, k * x[0]));
        let out = fourier_constant_solution(2.0, &mode, 0.3).unwrap().field;
        let expect = mode.scale_complex(Complex64::from_polar(1.0, -2.0 * k * k * 0.3));
        assert!((&out - &expect).max_abs() < 1e-12);
        let out = fourier_constant_solution(1.0, &u0, 0.7).unwrap().field;
        assert!((out.l2_norm() - u0.l2_norm()).abs() <= 1e-12 * u0.l2_norm());
    }

    #[test]
    fn fourier_in_two_dimensions() {
        let grid = Grid::new(2, 2.0, 16).unwrap();
        let (kx, ky) = (PI * 2.0 / 2.0, PI * -3.0 / 2.0);
        let mode = ComplexField::from_fn(grid, |x| Complex64::from_polar(1.0, kx * x[0] + ky * x[1]));
        let out = fourier_constant_solution(1.5, &mode, 0.2).unwrap().field;
        let expect = mode.scale_complex(Complex64::from_polar(1.0, -1.5 * (kx * kx + ky * ky) * 0.2));
        assert!((&out - &expect).max_abs() < 1e-12);
    }

    #[test]
    fn dense_step_matches_sparse_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = Grid::new(1, 4.0, 64).unwrap();
        let spec: CoefficientSpec = "background=1; delta(center=0, weight=1)".parse().unwrap();
        let g = regularize(&spec, &Mollifier::new(MollifierKind::Standard), 0.125, &grid).unwrap();
        let op = assemble_operator(&g);
        let values = (0..grid.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let u = ComplexField::new(grid, values).unwrap();
        let dt = op.default_dt();
        let dense = dense_reference_step(&op, &u, dt).unwrap().field;
        let sparse = step_cn(&op, &u, dt).unwrap();
        assert!((&dense - &sparse).l2_norm() <= 1e-13 * u.l2_norm());
        assert!((dense.l2_norm() - u.l2_norm()).abs() <= 1e-13 * u.l2_norm());
        assert!((&dense_reference_step(&op, &u, 0.0).unwrap().field - &u).max_abs() == 0.0);
        let big = Grid::new(2, 1.0, 32).unwrap();
        let op = assemble_operator(&RegularizedCoefficient::from_field(RealField::from_fn(big, |_| 1.0), 1.0).unwrap());
        assert!(matches!(
            dense_reference_step(&op, &ComplexField::zeros(big), 0.1),
            Err(Error::DenseTooLarge { max: 256, got: 1024 })
        ));
    }

    #[test]
    fn dense_step_in_two_dimensions() {
        let grid = Grid::new(2, 2.0, 16).unwrap();
        let spec: CoefficientSpec = "background=1; bump(center=(0.3, 0), width=1, height=2)".parse().unwrap();
        let g = regularize(&spec, &Mollifier::new(MollifierKind::Polynomial), 0.5, &grid).unwrap();
        let op = assemble_operator(&g);
        let u = gaussian(grid);
        let cfg = StepperConfig::new(op.default_dt(), 1.0).unwrap().with_tolerance(1e-15).unwrap();
        let sparse = crate::evolution::CrankNicolson::new(&op, cfg.tolerance).step(&u, cfg.dt).unwrap();
        let dense = dense_reference_step(&op, &u, cfg.dt).unwrap().field;
        assert!((&dense - &sparse).l2_norm() <= 1e-13 * u.l2_norm());
    }

    #[test]
    fn fine_grid_agrees_with_fourier_for_constant_coefficient() {
        let grid = Grid::new(1, 4.0, 128).unwrap();
        let p = Problem::new(
            grid,
            CoefficientSpec::constant(1.0).unwrap(),
            DataSpec::gaussian(1.0, 0.0, 1.0),
            TimeSettings::new(TimeStep::Auto, 0.5),
        );
        let fine = fine_grid_reference(&p, 2).unwrap();
        let exact = fourier_constant_solution(1.0, &p.data.sample(&grid).unwrap(), 0.5).unwrap();
        let gap = (&fine.field - &exact.field).l2_norm();
        let est = fine.error_estimate.unwrap();
        // Richardson estimate of the fine error bounds the true gap to within a factor
        assert!(gap <= 1.5 * est && gap >= 0.5 * est, "gap {gap}, estimate {est}");
        assert!(fine_grid_reference(&p, 3).is_err());
    }

    #[test]
    fn fine_grid_self_convergence_is_second_order() {
        let spec: CoefficientSpec = "background=1; bump(center=0, width=3, height=1)".parse().unwrap();
        let errs: Vec<f64> = [64usize, 128, 256]
            .iter()
            .map(|&n| {
                let grid = Grid::new(1, 4.0, n).unwrap();
                let p = Problem::new(grid, spec.clone(), DataSpec::gaussian(1.0, 0.0, 1.0), TimeSettings::new(TimeStep::Auto, 0.5));
                fine_grid_reference(&p, 2).unwrap().coarse_discrepancy.unwrap()
            })
            .collect();
        for w in errs.windows(2) {
            let p = (w[0] / w[1]).log2();
            assert!((p - 2.0).abs() < 0.2, "{errs:?}");
        }
    }
}
