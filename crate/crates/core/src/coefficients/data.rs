//! Initial data `u₀` for the Cauchy problem.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::syntax::{fmt_call, fmt_point, parse_items, Args, Item};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    /// `amplitude · exp(-a |x - center|² + i k·x)`, evaluated at the minimum
    /// periodic image of `x - center`.
    Gaussian { a: f64, center: [f64; 2], k: [f64; 2], amplitude: f64 },
    /// `weight · δ(x - center)`; only its mollifications are fields.
    Delta { center: [f64; 2], weight: f64 },
    Sampled { field: ComplexField, path: Option<String> },
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::Gaussian { a: 1.0, center: [0.0; 2], k: [0.0; 2], amplitude: 1.0 }
    }
}

impl DataSpec {
    pub fn gaussian(a: f64, center: f64, k: f64) -> Self {
        DataSpec::Gaussian { a, center: [center, 0.0], k: [k, 0.0], amplitude: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        match self {
            DataSpec::Gaussian { a, center, k, amplitude } => {
                if !(a.is_finite() && *a > 0.0) || !amplitude.is_finite() || !center.iter().chain(k).all(|v| v.is_finite()) {
                    return Err(Error::InvalidData(format!("gaussian needs a > 0 and finite parameters, got a={a}")));
                }
            }
            DataSpec::Delta { center, weight } => {
                if !weight.is_finite() || !center.iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidData("delta data needs finite center and weight".into()));
                }
            }
            DataSpec::Sampled { .. } => {}
        }
        Ok(())
    }

    pub fn is_function(&self) -> bool {
        !matches!(self, DataSpec::Delta { .. })
    }

    /// Closed-form value at a point; `None` for delta data.
    pub(crate) fn eval(&self, grid: &Grid, x: [f64; 2]) -> Option<Complex64> {
        match self {
            DataSpec::Gaussian { a, center, k, amplitude } => {
                let sx = grid.wrap(x[0] - center[0]);
                let (sy, ky) = if grid.dim() == 2 { (grid.wrap(x[1] - center[1]), k[1]) } else { (0.0, 0.0) };
                let phase = k[0] * (sx + center[0]) + ky * (sy + center[1]);
                Some(Complex64::from_polar(*amplitude * (-a * (sx * sx + sy * sy)).exp(), phase))
            }
            DataSpec::Sampled { field, .. } => {
                let re = field.re().interpolate(x);
                let im = field.im().interpolate(x);
                Some(Complex64::new(re, im))
            }
            DataSpec::Delta { .. } => None,
        }
    }

    /// Samples of `u₀` itself; `None` for delta data.
    pub fn sample(&self, grid: &Grid) -> Option<ComplexField> {
        match self {
            DataSpec::Sampled { field, .. } if field.grid() == grid => Some(field.clone()),
            DataSpec::Delta { .. } => None,
            _ => Some(ComplexField::from_fn(*grid, |x| self.eval(grid, x).unwrap_or_default())),
        }
    }
}

impl FromStr for DataSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let items = parse_items(text)?;
        let [item] = items.as_slice() else {
            return Err(Error::Parse(format!("initial data needs exactly one item, got {}", items.len())));
        };
        let Item::Call { name, args } = item else {
            return Err(Error::Parse("initial data must be gaussian(...), delta(...) or sampled(...)".into()));
        };
        let mut a = Args::new(name, args);
        let spec = match name.as_str() {
            "gaussian" => DataSpec::Gaussian {
                a: a.number("a", Some(1.0))?,
                center: a.point("center", Some([0.0; 2]))?,
                k: a.point("k", Some([0.0; 2]))?,
                amplitude: a.number("amplitude", Some(1.0))?,
            },
            "delta" => DataSpec::Delta { center: a.point("center", Some([0.0; 2]))?, weight: a.number("weight", Some(1.0))? },
            "sampled" => {
                let path = a.text("path")?;
                DataSpec::Sampled { field: ComplexField::load(&path)?, path: Some(path) }
            }
            other => return Err(Error::Parse(format!("unknown initial data `{other}`"))),
        };
        a.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for DataSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            DataSpec::Gaussian { a, center, k, amplitude } => fmt_call(
                "gaussian",
                &[
                    ("a", a.to_string()),
                    ("center", fmt_point(*center)),
                    ("k", fmt_point(*k)),
                    ("amplitude", amplitude.to_string()),
                ],
            ),
            DataSpec::Delta { center, weight } => {
                fmt_call("delta", &[("center", fmt_point(*center)), ("weight", weight.to_string())])
            }
            DataSpec::Sampled { path, .. } => {
                fmt_call("sampled", &[("path", format!("\"{}\"", path.as_deref().unwrap_or("<memory>")))])
            }
        };
        f.write_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let d: DataSpec = "gaussian(a=2, center=0.5, k=3)".parse().unwrap();
        assert_eq!(d, DataSpec::Gaussian { a: 2.0, center: [0.5, 0.0], k: [3.0, 0.0], amplitude: 1.0 });
        assert_eq!(d.to_string().parse::<DataSpec>().unwrap(), d);
        let d: DataSpec = "delta(center=(1, 2))".parse().unwrap();
        assert_eq!(d.to_string(), "delta(center=(1, 2), weight=1)");
        assert!("gaussian(a=-1)".parse::<DataSpec>().is_err());
        assert!("gaussian(); delta()".parse::<DataSpec>().is_err());
        assert!("wave(a=1)".parse::<DataSpec>().is_err());
    }

    #[test]
    fn gaussian_samples() {
        let grid = Grid::new(1, 8.0, 64).unwrap();
        let d = DataSpec::gaussian(1.0, 0.0, 2.0);
        let u = d.sample(&grid).unwrap();
        let j = 40;
        let x = grid.coord(j);
        let expect = Complex64::from_polar((-x * x).exp(), 2.0 * x);
        assert!((u.values()[j] - expect).norm() < 1e-14);
        assert!(DataSpec::Delta { center: [0.0; 2], weight: 1.0 }.sample(&grid).is_none());
    }
}
