//! Regularization by periodic convolution with `ψ_ε`.
//!
//! Delta atoms are convolved in closed form, jumps through the primitive of
//! the line kernel, and everything smooth by composite Simpson quadrature
//! over the `ε`-support. Quadrature weights are renormalized to unit mass so
//! that constants pass through exactly.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::DataSpec;
use super::mollifier::{check_epsilon, Mollifier, MollifierKind};
use super::quadrature::simpson;
use super::spec::{axis_images, bump_profile, jump_profile, periodic_radial, Atom, CoefficientSpec};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Field, Grid, RealField, Scalar};

/// Simpson nodes per axis across the mollifier support.
pub const SMOOTH_NODES_1D: usize = 129;
pub const SMOOTH_NODES_2D: usize = 33;
/// Simpson nodes on each side of a jump inside the support.
const LINE_NODES: usize = 65;

/// Geometric scales `ε_k = ε₀ r^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonLadder {
    values: Vec<f64>,
}

impl Default for EpsilonLadder {
    fn default() -> Self {
        Self::geometric(0.5, 0.5, 5).expect("default ladder is valid")
    }
}

impl EpsilonLadder {
    pub const MIN_LEN: usize = 4;

    pub fn geometric(eps0: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Precondition(format!("ladder ratio must lie in (0, 1), got {ratio}")));
        }
        Self::from_values((0..count).map(|k| eps0 * ratio.powi(k as i32)).collect())
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < Self::MIN_LEN {
            return Err(Error::Precondition(format!("a ladder needs at least {} scales, got {}", Self::MIN_LEN, values.len())));
        }
        for &e in &values {
            check_epsilon(e)?;
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Precondition("ladder scales must be strictly decreasing".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn smallest(&self) -> f64 {
        *self.values.last().expect("ladders are never empty")
    }

    /// Rejects ladders whose smallest scale falls below `2h`.
    pub fn check_resolved(&self, grid: &Grid) -> Result<()> {
        let min = 2.0 * grid.h();
        let eps = self.smallest();
        if eps < min * (1.0 - 1e-12) {
            return Err(Error::UnderResolved { eps, min });
        }
        Ok(())
    }
}

/// Samples of `g_ε` with a certified lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedCoefficient {
    field: RealField,
    epsilon: Option<f64>,
    mollifier: Option<MollifierKind>,
    c0: f64,
    w1inf: f64,
}

impl RegularizedCoefficient {
    /// Wraps grid samples bounded below by `c0 > 0`.
    pub fn from_field(field: RealField, c0: f64) -> Result<Self> {
        if !(c0 > 0.0) {
            return Err(Error::InvalidCoefficient(format!("lower bound must be positive, got {c0}")));
        }
        if field.min() < c0 {
            return Err(Error::InvalidCoefficient(format!("coefficient dips to {} below its bound {c0}", field.min())));
        }
        let w1inf = field.w1inf_norm();
        Ok(Self { field, epsilon: None, mollifier: None, c0, w1inf })
    }

    /// `g` sampled pointwise without mollification (regular specs only).
    pub fn sampled(spec: &CoefficientSpec, grid: &Grid) -> Result<Self> {
        let field = spec.sample(grid).ok_or_else(|| {
            Error::InvalidCoefficient("singular coefficients cannot be sampled pointwise".into())
        })?;
        Self::from_field(field, spec.background())
    }

    pub fn field(&self) -> &RealField {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    /// Mollification scale; `None` for pointwise samples.
    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn mollifier(&self) -> Option<MollifierKind> {
        self.mollifier
    }

    /// Certified `c₀` with `g_ε ≥ c₀` at every node.
    pub fn lower_bound(&self) -> f64 {
        self.c0
    }

    pub fn w1inf(&self) -> f64 {
        self.w1inf
    }

    pub fn max(&self) -> f64 {
        self.field.max()
    }
}

/// Unit-mass quadrature over the unit ball weighted by `ψ`.
struct BallRule {
    points: Vec<([f64; 2], f64)>,
}

impl BallRule {
    fn new(m: &Mollifier, dim: usize) -> Self {
        let mut points = Vec::new();
        match dim {
            1 => {
                for (r, w) in simpson(-1.0, 1.0, SMOOTH_NODES_1D) {
                    let k = m.density(r * r, 1);
                    if k > 0.0 {
                        points.push(([r, 0.0], w * k));
                    }
                }
            }
            _ => {
                let axis = simpson(-1.0, 1.0, SMOOTH_NODES_2D);
                for &(x, wx) in &axis {
                    for &(y, wy) in &axis {
                        let k = m.density(x * x + y * y, 2);
                        if k > 0.0 {
                            points.push(([x, y], wx * wy * k));
                        }
                    }
                }
            }
        }
        let mass: f64 = points.iter().map(|p| p.1).sum();
        points.iter_mut().for_each(|p| p.1 /= mass);
        Self { points }
    }

    fn apply<T: Scalar>(&self, eps: f64, x: [f64; 2], f: impl Fn([f64; 2]) -> T) -> T {
        self.points
            .iter()
            .fold(T::zero(), |acc, (r, w)| acc + f([x[0] - eps * r[0], x[1] - eps * r[1]]) * *w)
    }
}

/// Translation-invariant discrete kernel for grid-sampled atoms.
fn grid_stencil(m: &Mollifier, eps: f64, grid: &Grid) -> Vec<([isize; 2], f64)> {
    let h = grid.h();
    let reach = (eps / h).floor() as isize;
    let mut out = Vec::new();
    let second = if grid.dim() == 2 { reach } else { 0 };
    for i in -reach..=reach {
        for j in -second..=second {
            let w = m.scaled(eps, [i as f64 * h, j as f64 * h], grid.dim());
            if w > 0.0 {
                out.push(([i, j], w));
            }
        }
    }
    if out.is_empty() {
        out.push(([0, 0], 1.0));
    }
    let mass: f64 = out.iter().map(|p| p.1).sum();
    out.iter_mut().for_each(|p| p.1 /= mass);
    out
}

fn convolve_sampled<T: Scalar>(field: &Field<T>, stencil: &[([isize; 2], f64)]) -> Vec<T> {
    let g = *field.grid();
    let n = g.n() as isize;
    (0..g.len())
        .into_par_iter()
        .map(|k| {
            let idx = g.multi_index(k);
            stencil.iter().fold(T::zero(), |acc, (o, w)| {
                let i = (idx[0] as isize - o[0]).rem_euclid(n) as usize;
                let j = (idx[1] as isize - o[1]).rem_euclid(n) as usize;
                acc + field.values()[g.flat_index([i, j])] * *w
            })
        })
        .collect()
}

fn delta_value(m: &Mollifier, eps: f64, grid: &Grid, x: [f64; 2], center: [f64; 2]) -> f64 {
    match grid.dim() {
        1 => axis_images(grid, x[0] - center[0], eps).map(|s| m.scaled(eps, [s, 0.0], 1)).sum(),
        _ => {
            let mut total = 0.0;
            for sx in axis_images(grid, x[0] - center[0], eps) {
                for sy in axis_images(grid, x[1] - center[1], eps) {
                    total += m.scaled(eps, [sx, sy], 2);
                }
            }
            total
        }
    }
}

/// `(J ∗ ψ_ε)(x)` for a unit jump at displacement `s = wrap(x₁ - c)`.
fn jump_value(m: &Mollifier, eps: f64, grid: &Grid, s: f64) -> f64 {
    let half = 0.5 * grid.half_width();
    let dim = grid.dim();
    if s.abs() + eps <= half {
        // the window sees only the sharp step
        return if s.abs() < eps { m.line_primitive(s / eps, dim) } else if s >= 0.0 { 1.0 } else { 0.0 };
    }
    jump_quadrature(m, eps, grid, s)
}

/// Split Simpson rule for the jump convolution, valid for any window.
fn jump_quadrature(m: &Mollifier, eps: f64, grid: &Grid, s: f64) -> f64 {
    let dim = grid.dim();
    let pieces: Vec<(f64, f64, bool)> = if s.abs() < eps {
        vec![(-1.0, s / eps, true), (s / eps, 1.0, false)]
    } else {
        vec![(-1.0, 1.0, s >= 0.0)]
    };
    let split = s.abs() < eps;
    let (mut acc, mut mass) = (0.0, 0.0);
    for (a, b, left) in pieces {
        if b - a <= 0.0 {
            continue;
        }
        let nodes = simpson(a, b, LINE_NODES);
        let last = nodes.len() - 1;
        for (i, (r, w)) in nodes.into_iter().enumerate() {
            let k = m.line_kernel(r, dim) * w;
            if k == 0.0 {
                continue;
            }
            // one-sided limit at the discontinuity
            let arg = match (split, left) {
                (true, true) if i == last => f64::MIN_POSITIVE,
                (true, false) if i == 0 => -f64::MIN_POSITIVE,
                _ => grid.wrap(s - eps * r),
            };
            acc += k * jump_profile(grid, arg);
            mass += k;
        }
    }
    acc / mass
}

fn warn_if_under_resolved(eps: f64, grid: &Grid) {
    if eps < 2.0 * grid.h() {
        log::warn!("epsilon {eps} is below 2h = {}; the mollifier is under-resolved on {grid}", 2.0 * grid.h());
    }
}

/// `g_ε = g ∗ ψ_ε` sampled on `grid`.
pub fn regularize(spec: &CoefficientSpec, mollifier: &Mollifier, eps: f64, grid: &Grid) -> Result<RegularizedCoefficient> {
    check_epsilon(eps)?;
    warn_if_under_resolved(eps, grid);
    let dim = grid.dim();
    let mut values = vec![spec.background(); grid.len()];
    let ball = BallRule::new(mollifier, dim);
    for atom in spec.atoms() {
        let contribution: Vec<f64> = match atom {
            Atom::Delta { center, weight } => (0..grid.len())
                .into_par_iter()
                .map(|k| weight * delta_value(mollifier, eps, grid, grid.node(k), *center))
                .collect(),
            Atom::Jump { center, height } => (0..grid.len())
                .into_par_iter()
                .map(|k| height * jump_value(mollifier, eps, grid, grid.wrap(grid.node(k)[0] - center)))
                .collect(),
            Atom::Bump { center, width, height } => (0..grid.len())
                .into_par_iter()
                .map(|k| {
                    height * ball.apply(eps, grid.node(k), |y| periodic_radial(grid, y, *center, *width, bump_profile))
                })
                .collect(),
            Atom::Sampled { field, .. } => {
                if field.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                convolve_sampled(field, &grid_stencil(mollifier, eps, grid))
            }
        };
        for (v, c) in values.iter_mut().zip(contribution) {
            *v += c;
        }
    }
    let field = RealField::new(*grid, values)?;
    let mut out = RegularizedCoefficient::from_field(field, spec.background())?;
    out.epsilon = Some(eps);
    out.mollifier = Some(mollifier.kind());
    Ok(out)
}

/// `u_{0,ε} = u₀ ∗ ψ_ε` sampled on `grid`.
pub fn regularize_data(data: &DataSpec, mollifier: &Mollifier, eps: f64, grid: &Grid) -> Result<ComplexField> {
    check_epsilon(eps)?;
    warn_if_under_resolved(eps, grid);
    match data {
        DataSpec::Delta { center, weight } => Ok(ComplexField::from_fn(*grid, |x| {
            Complex64::new(weight * delta_value(mollifier, eps, grid, x, *center), 0.0)
        })),
        DataSpec::Sampled { field, .. } => {
            if field.grid() != grid {
                return Err(Error::GridMismatch);
            }
            ComplexField::new(*grid, convolve_sampled(field, &grid_stencil(mollifier, eps, grid)))
        }
        DataSpec::Gaussian { .. } => {
            let ball = BallRule::new(mollifier, grid.dim());
            let values = (0..grid.len())
                .into_par_iter()
                .map(|k| ball.apply(eps, grid.node(k), |y| data.eval(grid, y).unwrap_or_default()))
                .collect();
            ComplexField::new(*grid, values)
        }
    }
}

/// `(ε, ‖g_ε‖_{W^{1,∞}})` along a ladder.
pub fn moderateness_ladder(
    spec: &CoefficientSpec,
    mollifier: &Mollifier,
    ladder: &EpsilonLadder,
    grid: &Grid,
) -> Result<Vec<(f64, f64)>> {
    ladder.check_resolved(grid)?;
    ladder
        .values()
        .par_iter()
        .map(|&eps| Ok((eps, regularize(spec, mollifier, eps, grid)?.w1inf())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std() -> Mollifier {
        Mollifier::new(MollifierKind::Standard)
    }

    #[test]
    fn delta_regularizes_to_scaled_mollifier() {
        let grid = Grid::new(1, 2.0, 128).unwrap();
        let spec: CoefficientSpec = "background=1; delta(center=0, weight=1)".parse().unwrap();
        let m = std();
        let g = regularize(&spec, &m, 0.5, &grid).unwrap();
        for (k, v) in g.field().values().iter().enumerate() {
            let x = grid.coord(k);
            let expect = 1.0 + 2.0 * m.eval([2.0 * x, 0.0], 1);
            assert!((v - expect).abs() < 1e-14, "x={x}: {v} vs {expect}");
        }
        assert_eq!(g.lower_bound(), 1.0);
        assert_eq!(g.epsilon(), Some(0.5));
    }

    #[test]
    fn constant_background_passes_through() {
        let grid = Grid::new(2, 1.0, 16).unwrap();
        let spec = CoefficientSpec::constant(2.5).unwrap();
        for kind in MollifierKind::ALL {
            let g = regularize(&spec, &Mollifier::new(kind), 0.3, &grid).unwrap();
            assert!(g.field().values().iter().all(|&v| v == 2.5));
            assert_eq!(g.w1inf(), 2.5);
        }
    }

    #[test]
    fn jump_is_half_height_at_its_center() {
        let grid = Grid::new(1, 4.0, 256).unwrap();
        let spec: CoefficientSpec = "background=1; jump(center=0, height=1)".parse().unwrap();
        for kind in MollifierKind::ALL {
            for eps in [0.5, 0.1] {
                let g = regularize(&spec, &Mollifier::new(kind), eps, &grid).unwrap();
                let center = grid.n() / 2;
                assert_eq!(grid.coord(center), 0.0);
                assert!((g.field().values()[center] - 1.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jump_fallback_agrees_with_primitive_path() {
        let big = Grid::new(1, 8.0, 64).unwrap();
        let small = Grid::new(1, 0.6, 64).unwrap();
        let eps = 0.2;
        for kind in MollifierKind::ALL {
            let m = Mollifier::new(kind);
            for s in [-0.15, -0.05, 0.0, 0.07, 0.19, 0.3, -0.25] {
                let exact = jump_value(&m, eps, &big, s);
                let split = jump_quadrature(&m, eps, &big, s);
                assert!((exact - split).abs() < 1e-6, "{kind} s={s}: {exact} vs {split}");
                let v = jump_value(&m, eps, &small, s);
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn positivity_holds_for_every_atom_kind() {
        let grid = Grid::new(1, 3.0, 128).unwrap();
        let sampled = RealField::from_fn(grid, |x| (x[0]).sin().powi(2));
        let spec = CoefficientSpec::constant(0.7)
            .unwrap()
            .with_atom(Atom::Delta { center: [0.3, 0.0], weight: 2.0 })
            .unwrap()
            .with_atom(Atom::Jump { center: -1.0, height: 0.5 })
            .unwrap()
            .with_atom(Atom::Bump { center: [1.0, 0.0], width: 0.8, height: 3.0 })
            .unwrap()
            .with_atom(Atom::Sampled { field: sampled, path: None })
            .unwrap();
        for eps in [1.0, 0.4, 0.1] {
            let g = regularize(&spec, &std(), eps, &grid).unwrap();
            assert!(g.field().min() >= 0.7);
        }
    }

    #[test]
    fn bump_mass_is_preserved() {
        let grid = Grid::new(1, 4.0, 512).unwrap();
        let spec: CoefficientSpec = "background=1; bump(center=0.3, width=1.5, height=2)".parse().unwrap();
        let raw = spec.sample(&grid).unwrap().integral();
        for kind in MollifierKind::ALL {
            for eps in [0.5, 0.125] {
                let g = regularize(&spec, &Mollifier::new(kind), eps, &grid).unwrap();
                assert!((g.field().integral() - raw).abs() < 1e-9, "{kind} {eps}");
            }
        }
    }

    #[test]
    fn translation_commutes_with_regularization() {
        let grid = Grid::new(1, 2.0, 64).unwrap();
        let h = grid.h();
        let spec: CoefficientSpec =
            "background=1; delta(center=0.1, weight=0.5); bump(center=-0.5, width=0.7, height=1); jump(center=0.4, height=2)"
                .parse()
                .unwrap();
        let m = std();
        let base = regularize(&spec, &m, 0.25, &grid).unwrap();
        for cells in [1isize, 5, -7] {
            let moved = regularize(&spec.translate([cells as f64 * h, 0.0]), &m, 0.25, &grid).unwrap();
            let shifted = base.field().translate(0, cells);
            for (a, b) in moved.field().values().iter().zip(shifted.values()) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn smooth_coefficients_converge_monotonically() {
        let grid = Grid::new(1, 4.0, 1024).unwrap();
        let spec: CoefficientSpec = "background=1; bump(center=0, width=2, height=1)".parse().unwrap();
        let g = spec.sample(&grid).unwrap();
        let ladder = EpsilonLadder::default();
        let errs: Vec<f64> = ladder
            .values()
            .iter()
            .map(|&e| (regularize(&spec, &std(), e, &grid).unwrap().field() - &g).w1inf_norm())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] * 1.05);
        }
    }

    #[test]
    fn sampled_coefficient_must_match_grid() {
        let grid = Grid::new(1, 2.0, 32).unwrap();
        let other = Grid::new(1, 2.0, 64).unwrap();
        let spec = CoefficientSpec::constant(1.0)
            .unwrap()
            .with_atom(Atom::Sampled { field: RealField::zeros(other), path: None })
            .unwrap();
        assert!(matches!(regularize(&spec, &std(), 0.5, &grid), Err(Error::GridMismatch)));
        assert!(matches!(regularize(&spec, &std(), 0.0, &grid), Err(Error::EpsilonOutOfRange(_))));
    }

    #[test]
    fn delta_data_becomes_mollifier_profile() {
        let grid = Grid::new(1, 2.0, 64).unwrap();
        let m = std();
        let u = regularize_data(&DataSpec::Delta { center: [0.0; 2], weight: 1.0 }, &m, 0.5, &grid).unwrap();
        for (k, v) in u.values().iter().enumerate() {
            assert!((v.re - m.scaled(0.5, [grid.coord(k), 0.0], 1)).abs() < 1e-14);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn gaussian_data_converges_at_second_order() {
        let grid = Grid::new(1, 8.0, 1024).unwrap();
        let data = DataSpec::gaussian(1.0, 0.0, 1.5);
        let u0 = data.sample(&grid).unwrap();
        let ladder = EpsilonLadder::default();
        for kind in MollifierKind::ALL {
            let m = Mollifier::new(kind);
            let pts: Vec<(f64, f64)> = ladder
                .values()
                .iter()
                .map(|&e| (e, (&regularize_data(&data, &m, e, &grid).unwrap() - &u0).l2_norm()))
                .collect();
            for w in pts.windows(2) {
                assert!(w[1].1 < w[0].1);
            }
            // least-squares slope of log(err) against log(eps)
            let n = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (e, v)| (a + e.ln(), b + v.ln()));
            let (mx, my) = (sx / n, sy / n);
            let num: f64 = pts.iter().map(|(e, v)| (e.ln() - mx) * (v.ln() - my)).sum();
            let den: f64 = pts.iter().map(|(e, _)| (e.ln() - mx).powi(2)).sum();
            let slope = num / den;
            assert!((slope - 2.0).abs() <= 0.2, "{kind}: slope {slope}");
        }
    }

    #[test]
    fn ladder_validation() {
        assert_eq!(EpsilonLadder::default().values(), &[0.5, 0.25, 0.125, 0.0625, 0.03125]);
        assert!(EpsilonLadder::geometric(0.5, 0.5, 3).is_err());
        assert!(EpsilonLadder::geometric(1.5, 0.5, 5).is_err());
        assert!(EpsilonLadder::geometric(0.5, 1.0, 5).is_err());
        assert!(EpsilonLadder::from_values(vec![0.5, 0.5, 0.2, 0.1]).is_err());
        let grid = Grid::new(1, 4.0, 256).unwrap();
        let spec = CoefficientSpec::constant(1.0).unwrap();
        assert!(matches!(
            moderateness_ladder(&spec, &std(), &EpsilonLadder::default(), &grid),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn two_dimensional_delta_keeps_unit_mass() {
        let grid = Grid::new(2, 1.0, 128).unwrap();
        let spec: CoefficientSpec = "background=1; delta(center=(0.1, -0.2), weight=1)".parse().unwrap();
        let g = regularize(&spec, &std(), 0.5, &grid).unwrap();
        let mass = g.field().integral() - 4.0;
        assert!((mass - 1.0).abs() < 1e-7, "{mass}");
    }
}
