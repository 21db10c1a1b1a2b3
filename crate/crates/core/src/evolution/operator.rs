//! Flux-form discretization of `Σ_j ∂_j(g ∂_j ·)` on a periodic grid.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::RegularizedCoefficient;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};

/// How face values `g_{j+1/2}` are formed from the two adjacent nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceMean {
    #[default]
    Arithmetic,
    Harmonic,
}

impl FaceMean {
    pub fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            FaceMean::Arithmetic => 0.5 * (a + b),
            FaceMean::Harmonic => 2.0 * a * b / (a + b),
        }
    }
}

impl fmt::Display for FaceMean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaceMean::Arithmetic => "arithmetic",
            FaceMean::Harmonic => "harmonic",
        })
    }
}

impl FromStr for FaceMean {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "arithmetic" => Ok(FaceMean::Arithmetic),
            "harmonic" => Ok(FaceMean::Harmonic),
            other => Err(Error::Parse(format!("unknown face mean `{other}`"))),
        }
    }
}

/// `(Lu)_j = Σ_axes (g_{j+1/2}(u_{j+1} - u_j) - g_{j-1/2}(u_j - u_{j-1})) / h²`.
///
/// Immutable once assembled; share it freely between solves.
#[derive(Debug, Clone)]
pub struct SpatialOperator {
    grid: Grid,
    coefficient: RegularizedCoefficient,
    mean: FaceMean,
    /// `faces[axis][j]` is the value on the face between node `j` and its
    /// forward neighbour along `axis`.
    faces: Vec<Vec<f64>>,
    diagonal: Vec<f64>,
}

pub fn assemble_operator(g: &RegularizedCoefficient) -> SpatialOperator {
    SpatialOperator::assemble(g, FaceMean::Arithmetic)
}

impl SpatialOperator {
    pub fn assemble(g: &RegularizedCoefficient, mean: FaceMean) -> Self {
        let grid = *g.grid();
        let values = g.field().values();
        let inv_h2 = 1.0 / (grid.h() * grid.h());
        let faces: Vec<Vec<f64>> = (0..grid.dim())
            .map(|axis| {
                (0..grid.len())
                    .map(|j| mean.combine(values[j], values[grid.neighbor(j, axis, true)]) * inv_h2)
                    .collect()
            })
            .collect();
        let diagonal = (0..grid.len())
            .map(|j| {
                -(0..grid.dim())
                    .map(|axis| faces[axis][j] + faces[axis][grid.neighbor(j, axis, false)])
                    .sum::<f64>()
            })
            .collect();
        Self { grid, coefficient: g.clone(), mean, faces, diagonal }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficient(&self) -> &RegularizedCoefficient {
        &self.coefficient
    }

    pub fn mean(&self) -> FaceMean {
        self.mean
    }

    /// Face values along `axis`, already divided by `h²`.
    pub fn faces(&self, axis: usize) -> &[f64] {
        &self.faces[axis]
    }

    /// Diagonal entries of the matrix of `L`.
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `h²·π / (2 max g)`: at least four samples per period of the fastest
    /// discrete mode.
    pub fn default_dt(&self) -> f64 {
        let h = self.grid.h();
        h * h * PI / (2.0 * self.coefficient.max())
    }

    /// Upper bound on the spectral radius of `L` by Gershgorin.
    pub fn spectral_bound(&self) -> f64 {
        self.diagonal.iter().map(|d| 2.0 * d.abs()).fold(0.0, f64::max)
    }

    pub(crate) fn apply_slice(&self, u: &[Complex64], out: &mut [Complex64]) {
        // flux differences, so that constants give exact zeros
        for j in 0..self.grid.len() {
            let mut acc = Complex64::default();
            for axis in 0..self.grid.dim() {
                let fwd = self.grid.neighbor(j, axis, true);
                let bwd = self.grid.neighbor(j, axis, false);
                acc += (u[fwd] - u[j]) * self.faces[axis][j] - (u[j] - u[bwd]) * self.faces[axis][bwd];
            }
            out[j] = acc;
        }
    }

    pub fn apply(&self, u: &ComplexField) -> ComplexField {
        assert_eq!(u.grid(), &self.grid, "field and operator live on different grids");
        let mut out = vec![Complex64::default(); self.grid.len()];
        self.apply_slice(u.values(), &mut out);
        ComplexField::new(self.grid, out).expect("finite input gives finite output")
    }

    /// `-⟨Lu, u⟩ = h^d Σ_axes Σ_j g_{j+1/2} |u_{j+1} - u_j|² / h²`.
    pub fn energy_form(&self, u: &ComplexField) -> f64 {
        let v = u.values();
        let mut total = 0.0;
        for axis in 0..self.grid.dim() {
            for j in 0..self.grid.len() {
                total += self.faces[axis][j] * (v[self.grid.neighbor(j, axis, true)] - v[j]).norm_sqr();
            }
        }
        total * self.grid.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{regularize, CoefficientSpec, Mollifier, MollifierKind};
    use crate::grid::RealField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, rng: &mut ChaCha8Rng) -> ComplexField {
        let values = (0..grid.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        ComplexField::new(grid, values).unwrap()
    }

    fn singular(grid: &Grid) -> RegularizedCoefficient {
        let spec: CoefficientSpec = "background=1; delta(center=0.2, weight=1); jump(center=-1, height=0.5)".parse().unwrap();
        regularize(&spec, &Mollifier::new(MollifierKind::Standard), 0.1, grid).unwrap()
    }

    #[test]
    fn constant_coefficient_has_the_discrete_symbol() {
        let grid = Grid::new(1, 2.0, 64).unwrap();
        let g = RegularizedCoefficient::from_field(RealField::from_fn(grid, |_| 3.0), 3.0).unwrap();
        let op = assemble_operator(&g);
        let h = grid.h();
        for m in [1, 5, 31, 32] {
            let k = PI * m as f64 / grid.half_width();
            let u = ComplexField::from_fn(grid, |x| Complex64::from_polar(1.0, k * x[0]));
            let sym = -3.0 * 4.0 / (h * h) * (0.5 * k * h).sin().powi(2);
            let lu = op.apply(&u);
            for (a, b) in lu.values().iter().zip(u.values()) {
                assert!((a - b * sym).norm() <= 1e-12 * sym.abs().max(1.0));
            }
        }
    }

    #[test]
    fn hermitian_and_negative_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [1, 2] {
            let grid = Grid::new(dim, 2.0, if dim == 1 { 64 } else { 32 }).unwrap();
            for mean in [FaceMean::Arithmetic, FaceMean::Harmonic] {
                let op = SpatialOperator::assemble(&singular(&grid), mean);
                for _ in 0..20 {
                    let u = random_field(grid, &mut rng);
                    let v = random_field(grid, &mut rng);
                    let luv = op.apply(&u).inner(&v).unwrap();
                    let ulv = u.inner(&op.apply(&v)).unwrap();
                    let scale = op.apply(&u).l2_norm() * v.l2_norm();
                    assert!((luv - ulv).norm() <= 1e-12 * scale);
                    let q = op.apply(&u).inner(&u).unwrap();
                    assert!(q.re <= 1e-12 * u.l2_norm().powi(2));
                    assert!((q.re + op.energy_form(&u)).abs() <= 1e-12 * scale.max(q.norm()));
                }
            }
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let grid = Grid::new(2, 1.0, 16).unwrap();
        let op = assemble_operator(&singular(&grid));
        let u = ComplexField::from_fn(grid, |_| Complex64::new(2.0, -1.0));
        assert!(op.apply(&u).values().iter().all(|v| *v == Complex64::default()));
        assert_eq!(op.energy_form(&u), 0.0);
    }

    #[test]
    fn face_means() {
        assert_eq!(FaceMean::Arithmetic.combine(1.0, 3.0), 2.0);
        assert_eq!(FaceMean::Harmonic.combine(1.0, 3.0), 1.5);
        assert_eq!("Harmonic".parse::<FaceMean>().unwrap(), FaceMean::Harmonic);
        assert!("geometric".parse::<FaceMean>().is_err());
    }

    #[test]
    fn default_dt_formula() {
        let grid = Grid::new(1, 4.0, 512).unwrap();
        let g = RegularizedCoefficient::from_field(RealField::from_fn(grid, |_| 2.0), 2.0).unwrap();
        let op = assemble_operator(&g);
        let h = grid.h();
        assert!((op.default_dt() - h * h * PI / 4.0).abs() < 1e-18);
    }
}
