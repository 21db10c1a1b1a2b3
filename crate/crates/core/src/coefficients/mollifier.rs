//! Friedrichs mollifiers: smooth, nonnegative, unit-mass bumps supported in
//! the closed unit ball, and their `ε`-scalings.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::quadrature::gauss3;
use crate::error::{Error, Result};

/// Admissible mollifier profiles, as functions of `r² = |x|²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MollifierKind {
    /// `exp(-1 / (1 - r²))`, the classical C∞ bump.
    Standard,
    /// `(1 - r²)³`, a C² bump with closed-form moments.
    Polynomial,
}

impl MollifierKind {
    pub const ALL: [MollifierKind; 2] = [MollifierKind::Standard, MollifierKind::Polynomial];

    /// Unnormalized profile.
    pub fn shape(self, r2: f64) -> f64 {
        if r2 >= 1.0 {
            return 0.0;
        }
        match self {
            MollifierKind::Standard => (-1.0 / (1.0 - r2)).exp(),
            MollifierKind::Polynomial => (1.0 - r2).powi(3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MollifierKind::Standard => "standard",
            MollifierKind::Polynomial => "polynomial",
        }
    }
}

impl fmt::Display for MollifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MollifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "standard" | "bump" => Ok(MollifierKind::Standard),
            "polynomial" | "poly" => Ok(MollifierKind::Polynomial),
            other => Err(Error::UnknownMollifier(other.to_string())),
        }
    }
}

// Panels for normalization and for the primitive tables.
const PANELS: usize = 4096;
// The two-dimensional marginal is tabulated more coarsely; each entry costs
// an inner quadrature.
const PANELS_2D: usize = 1024;
const INNER_PANELS: usize = 128;

/// Tabulated primitive `P(t) = ∫_{-1}^t k(s) ds` of a line kernel `k`,
/// evaluated by cubic Hermite interpolation with the exact kernel as slope.
#[derive(Debug)]
struct PrimitiveTable {
    step: f64,
    kernel: Vec<f64>,
    primitive: Vec<f64>,
}

impl PrimitiveTable {
    fn build(panels: usize, kernel: impl Fn(f64) -> f64) -> Self {
        let step = 2.0 / panels as f64;
        let node = |i: usize| -1.0 + i as f64 * step;
        let mut primitive = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        primitive.push(0.0);
        for i in 0..panels {
            acc += gauss3(node(i), node(i + 1), 1, &kernel);
            primitive.push(acc);
        }
        // remove the residual quadrature error so that P(1) = 1 exactly
        let total = acc;
        primitive.iter_mut().for_each(|p| *p /= total);
        let kernel = (0..=panels).map(|i| kernel(node(i)) / total).collect();
        Self { step, kernel, primitive }
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= -1.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let s = (t + 1.0) / self.step;
        let i = (s.floor() as usize).min(self.kernel.len() - 2);
        let u = s - i as f64;
        let (p0, p1) = (self.primitive[i], self.primitive[i + 1]);
        let (m0, m1) = (self.kernel[i] * self.step, self.kernel[i + 1] * self.step);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * m1
    }
}

#[derive(Debug)]
struct MollifierData {
    kind: MollifierKind,
    norm_1d: f64,
    norm_2d: f64,
    primitive_1d: PrimitiveTable,
    primitive_2d: OnceLock<PrimitiveTable>,
}

/// A normalized mollifier `ψ` with support radius 1.
///
/// Cloning is cheap; the normalization constants and primitive tables are
/// computed once on construction and shared.
#[derive(Debug, Clone)]
pub struct Mollifier {
    data: Arc<MollifierData>,
}

impl PartialEq for Mollifier {
    fn eq(&self, other: &Self) -> bool {
        self.kind() == other.kind()
    }
}

impl Mollifier {
    pub fn new(kind: MollifierKind) -> Self {
        let raw_1d = gauss3(-1.0, 1.0, PANELS, |x| kind.shape(x * x));
        let raw_2d = 2.0 * std::f64::consts::PI * gauss3(0.0, 1.0, PANELS, |r| r * kind.shape(r * r));
        let norm_1d = 1.0 / raw_1d;
        let primitive_1d = PrimitiveTable::build(PANELS, |x| norm_1d * kind.shape(x * x));
        Self {
            data: Arc::new(MollifierData {
                kind,
                norm_1d,
                norm_2d: 1.0 / raw_2d,
                primitive_1d,
                primitive_2d: OnceLock::new(),
            }),
        }
    }

    pub fn kind(&self) -> MollifierKind {
        self.data.kind
    }

    /// Normalization constant `c` in `ψ = c · shape` for dimension `dim`.
    pub fn normalization(&self, dim: usize) -> f64 {
        match dim {
            1 => self.data.norm_1d,
            _ => self.data.norm_2d,
        }
    }

    /// `ψ(x)` as a function of `r² = |x|²`.
    pub fn density(&self, r2: f64, dim: usize) -> f64 {
        self.normalization(dim) * self.data.kind.shape(r2)
    }

    pub fn eval(&self, x: [f64; 2], dim: usize) -> f64 {
        self.density(radius2(x, dim), dim)
    }

    /// `ψ_ε(x) = ε^{-d} ψ(x / ε)`. The caller is responsible for `ε ∈ (0, 1]`.
    pub fn scaled(&self, eps: f64, x: [f64; 2], dim: usize) -> f64 {
        let r2 = radius2(x, dim) / (eps * eps);
        self.density(r2, dim) / eps.powi(dim as i32)
    }

    /// `sup ψ`, attained at the origin.
    pub fn sup(&self, dim: usize) -> f64 {
        self.density(0.0, dim)
    }

    /// Kernel seen by functions that vary along one axis only: `ψ` itself in
    /// 1D and its marginal `∫ ψ(t, y) dy` in 2D.
    pub fn line_kernel(&self, t: f64, dim: usize) -> f64 {
        match dim {
            1 => self.density(t * t, 1),
            _ => self.marginal_2d(t),
        }
    }

    /// `∫_{-1}^{t} line_kernel(s) ds`, rising from 0 to 1 across `[-1, 1]`.
    pub fn line_primitive(&self, t: f64, dim: usize) -> f64 {
        match dim {
            1 => self.data.primitive_1d.eval(t),
            _ => self
                .data
                .primitive_2d
                .get_or_init(|| PrimitiveTable::build(PANELS_2D, |t| self.marginal_2d(t)))
                .eval(t),
        }
    }

    fn marginal_2d(&self, t: f64) -> f64 {
        let rest = 1.0 - t * t;
        if rest <= 0.0 {
            return 0.0;
        }
        let y_max = rest.sqrt();
        gauss3(-y_max, y_max, INNER_PANELS, |y| self.density(t * t + y * y, 2))
    }
}

/// Checked evaluation of `ψ_ε(x)`.
pub fn scale_mollifier(mollifier: &Mollifier, eps: f64, x: [f64; 2], dim: usize) -> Result<f64> {
    check_epsilon(eps)?;
    Ok(mollifier.scaled(eps, x, dim))
}

pub fn make_mollifier(variant: &str) -> Result<Mollifier> {
    Ok(Mollifier::new(variant.parse()?))
}

pub(crate) fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(eps))
    }
}

fn radius2(x: [f64; 2], dim: usize) -> f64 {
    match dim {
        1 => x[0] * x[0],
        _ => x[0] * x[0] + x[1] * x[1],
    }
}
