//! Shared fixtures for the benchmarks under `benches/`.

use pdem_core::{regularize, CoefficientSpec, ComplexField, DataSpec, Grid, Mollifier, MollifierKind, SpatialOperator};

pub const DELTA_1D: &str = "background=1; delta(center=0, weight=1)";
pub const DELTA_2D: &str = "background=1; delta(center=(0, 0), weight=0.5)";

/// A δ-mass problem at scale `eps` on `[-L, L)^d` with `n` points per axis.
pub struct Fixture {
    pub grid: Grid,
    pub spec: CoefficientSpec,
    pub op: SpatialOperator,
    pub u0: ComplexField,
}

impl Fixture {
    pub fn new(d: usize, half_width: f64, n: usize, eps: f64) -> Self {
        let grid = Grid::new(d, half_width, n).expect("valid grid");
        let (spec, data) = if d == 1 {
            (DELTA_1D, "gaussian(a=1, center=0, k=2)")
        } else {
            (DELTA_2D, "gaussian(a=2, center=(0.3, -0.2), k=(1, 2))")
        };
        let spec: CoefficientSpec = spec.parse().expect("valid spec");
        let g = regularize(&spec, &Mollifier::new(MollifierKind::Standard), eps, &grid).expect("resolved");
        let op = SpatialOperator::assemble(&g, Default::default());
        let data: DataSpec = data.parse().expect("valid data");
        let u0 = data.sample(&grid).expect("data matches dimension");
        Self { grid, spec, op, u0 }
    }
}
