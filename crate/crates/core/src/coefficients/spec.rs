//! Symbolic coefficients `g = background + Σ atoms`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use super::mollifier::{Mollifier, MollifierKind};
use super::syntax::{fmt_call, fmt_point, parse_items, Args, Item};
use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};

/// Sharpness of the bump profile `exp(-a r² / (1 - r²))`. Larger values give
/// a Gaussian-like core that reaches its edge layer only where the profile is
/// already negligible.
pub const BUMP_SHARPNESS: f64 = 4.0;

/// Smooth compactly supported bump with peak 1 at `r = 0` and support `r < 1`.
pub fn bump_profile(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (-BUMP_SHARPNESS * r2 / (1.0 - r2)).exp()
    }
}

pub(crate) fn standard_step() -> &'static Mollifier {
    static STEP: OnceLock<Mollifier> = OnceLock::new();
    STEP.get_or_init(|| Mollifier::new(MollifierKind::Standard))
}

/// One nonnegative constituent of a coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// `weight · δ(x - center)`.
    Delta { center: [f64; 2], weight: f64 },
    /// Upward step of `height` across the plane `x₁ = center`, returning to
    /// zero through a smooth ramp centred on the antipodal plane so the
    /// profile is periodic with a single discontinuity.
    Jump { center: f64, height: f64 },
    /// `height · bump_profile(|x - center|² / width²)`.
    Bump { center: [f64; 2], width: f64, height: f64 },
    /// Nonnegative samples on a grid; `path` records where they were loaded from.
    Sampled { field: RealField, path: Option<String> },
}

impl Atom {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCoefficient(m));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Atom::Delta { center, weight } => {
                if !finite(center) || !weight.is_finite() || *weight < 0.0 {
                    return bad(format!("delta weight must be finite and nonnegative, got {weight}"));
                }
            }
            Atom::Jump { center, height } => {
                if !center.is_finite() || !height.is_finite() || *height < 0.0 {
                    return bad(format!("jump height must be finite and nonnegative, got {height}"));
                }
            }
            Atom::Bump { center, width, height } => {
                if !finite(center) || !(width.is_finite() && *width > 0.0) || !height.is_finite() || *height < 0.0 {
                    return bad(format!("bump needs width > 0 and height >= 0, got width={width} height={height}"));
                }
            }
            Atom::Sampled { field, .. } => {
                if field.min() < 0.0 {
                    return bad("sampled atom has negative values".into());
                }
            }
        }
        Ok(())
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, Atom::Delta { .. } | Atom::Jump { .. })
    }

    fn translated(&self, shift: [f64; 2]) -> Atom {
        match self {
            Atom::Delta { center, weight } => {
                Atom::Delta { center: [center[0] + shift[0], center[1] + shift[1]], weight: *weight }
            }
            Atom::Jump { center, height } => Atom::Jump { center: center + shift[0], height: *height },
            Atom::Bump { center, width, height } => {
                Atom::Bump { center: [center[0] + shift[0], center[1] + shift[1]], width: *width, height: *height }
            }
            Atom::Sampled { field, .. } => {
                let h = field.grid().h();
                let mut f = field.translate(0, (shift[0] / h).round() as isize);
                if field.grid().dim() == 2 {
                    f = f.translate(1, (shift[1] / h).round() as isize);
                }
                Atom::Sampled { field: f, path: None }
            }
        }
    }
}

/// Sum over the periodic images of `disp` (one axis) that fall inside `radius`.
pub(crate) fn axis_images(grid: &Grid, disp: f64, radius: f64) -> impl Iterator<Item = f64> {
    let p = grid.period();
    let base = grid.wrap(disp);
    let m = (radius / p).ceil() as i64;
    (-m..=m).map(move |k| base + k as f64 * p).filter(move |s| s.abs() < radius)
}

/// Periodic evaluation of `height · profile(|x - c|² / width²)`.
pub(crate) fn periodic_radial(grid: &Grid, x: [f64; 2], center: [f64; 2], width: f64, f: impl Fn(f64) -> f64) -> f64 {
    let w2 = width * width;
    match grid.dim() {
        1 => axis_images(grid, x[0] - center[0], width).map(|s| f(s * s / w2)).sum(),
        _ => {
            let mut total = 0.0;
            for sx in axis_images(grid, x[0] - center[0], width) {
                for sy in axis_images(grid, x[1] - center[1], width) {
                    total += f((sx * sx + sy * sy) / w2);
                }
            }
            total
        }
    }
}

/// Unit jump profile at signed displacement `s = wrap(x₁ - center)`.
pub(crate) fn jump_profile(grid: &Grid, s: f64) -> f64 {
    let l = grid.half_width();
    if s.abs() <= 0.5 * l {
        return if s >= 0.0 { 1.0 } else { 0.0 };
    }
    let t = if s > 0.0 { s } else { s + 2.0 * l };
    1.0 - standard_step().line_primitive((t - l) / (0.5 * l), 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    background: f64,
    atoms: Vec<Atom>,
}

impl CoefficientSpec {
    pub fn constant(background: f64) -> Result<Self> {
        if !(background.is_finite() && background > 0.0) {
            return Err(Error::InvalidCoefficient(format!("background must be positive, got {background}")));
        }
        Ok(Self { background, atoms: Vec::new() })
    }

    pub fn with_atom(mut self, atom: Atom) -> Result<Self> {
        atom.validate()?;
        self.atoms.push(atom);
        Ok(self)
    }

    pub fn background(&self) -> f64 {
        self.background
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// No delta or jump atoms: the coefficient is a W^{1,∞} function that can
    /// be sampled pointwise.
    pub fn is_regular(&self) -> bool {
        !self.atoms.iter().any(Atom::is_singular)
    }

    /// Pointwise samples of `g` itself; `None` for singular specs.
    pub fn sample(&self, grid: &Grid) -> Option<RealField> {
        if !self.is_regular() {
            return None;
        }
        let mut out = RealField::from_fn(*grid, |_| self.background);
        for atom in &self.atoms {
            match atom {
                Atom::Bump { center, width, height } => {
                    for (k, v) in out.values_mut().iter_mut().enumerate() {
                        *v += height * periodic_radial(grid, grid.node(k), *center, *width, bump_profile);
                    }
                }
                Atom::Sampled { field, .. } => {
                    for (k, v) in out.values_mut().iter_mut().enumerate() {
                        *v += if field.grid() == grid { field.values()[k] } else { field.interpolate(grid.node(k)) };
                    }
                }
                Atom::Delta { .. } | Atom::Jump { .. } => unreachable!(),
            }
        }
        Some(out)
    }

    /// Shifts every atom by `shift`; sampled atoms move by the nearest whole
    /// number of cells.
    pub fn translate(&self, shift: [f64; 2]) -> Self {
        Self { background: self.background, atoms: self.atoms.iter().map(|a| a.translated(shift)).collect() }
    }
}

impl FromStr for CoefficientSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut background = None;
        let mut atoms = Vec::new();
        for item in parse_items(text)? {
            match item {
                Item::Assign { name, value } if name == "background" => {
                    if background.replace(value).is_some() {
                        return Err(Error::Parse("background given twice".into()));
                    }
                }
                Item::Assign { name, .. } => return Err(Error::Parse(format!("unknown setting `{name}`"))),
                Item::Call { name, args } => {
                    let mut a = Args::new(&name, &args);
                    let atom = match name.as_str() {
                        "delta" => Atom::Delta { center: a.point("center", Some([0.0; 2]))?, weight: a.number("weight", Some(1.0))? },
                        "jump" => Atom::Jump { center: a.number("center", Some(0.0))?, height: a.number("height", Some(1.0))? },
                        "bump" => Atom::Bump {
                            center: a.point("center", Some([0.0; 2]))?,
                            width: a.number("width", Some(1.0))?,
                            height: a.number("height", Some(1.0))?,
                        },
                        "sampled" => {
                            let path = a.text("path")?;
                            let field = RealField::load(&path)?;
                            Atom::Sampled { field, path: Some(path) }
                        }
                        other => return Err(Error::Parse(format!("unknown atom `{other}`"))),
                    };
                    a.finish()?;
                    atom.validate()?;
                    atoms.push(atom);
                }
            }
        }
        let background = background.ok_or_else(|| Error::Parse("coefficient spec needs `background=<value>`".into()))?;
        let mut spec = CoefficientSpec::constant(background)?;
        spec.atoms = atoms;
        Ok(spec)
    }
}

impl fmt::Display for CoefficientSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "background={}", self.background)?;
        for atom in &self.atoms {
            let text = match atom {
                Atom::Delta { center, weight } => {
                    fmt_call("delta", &[("center", fmt_point(*center)), ("weight", weight.to_string())])
                }
                Atom::Jump { center, height } => {
                    fmt_call("jump", &[("center", center.to_string()), ("height", height.to_string())])
                }
                Atom::Bump { center, width, height } => fmt_call(
                    "bump",
                    &[("center", fmt_point(*center)), ("width", width.to_string()), ("height", height.to_string())],
                ),
                Atom::Sampled { path, .. } => {
                    fmt_call("sampled", &[("path", format!("\"{}\"", path.as_deref().unwrap_or("<memory>")))])
                }
            };
            write!(f, "; {text}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_the_documented_example() {
        let spec: CoefficientSpec =
            "background=1.0; delta(center=0.0, weight=1.0); jump(center=0.5, height=2.0)".parse().unwrap();
        assert_eq!(spec.background(), 1.0);
        assert_eq!(spec.atoms().len(), 2);
        assert_eq!(spec.atoms()[1], Atom::Jump { center: 0.5, height: 2.0 });
        assert!(!spec.is_regular());
        assert_eq!(spec.to_string(), "background=1; delta(center=0, weight=1); jump(center=0.5, height=2)");
    }

    #[test]
    fn rejects_nonpositive_and_negative_parts() {
        assert!("background=0".parse::<CoefficientSpec>().is_err());
        assert!("background=-1".parse::<CoefficientSpec>().is_err());
        assert!("delta(center=0)".parse::<CoefficientSpec>().is_err());
        assert!("background=1; delta(weight=-1)".parse::<CoefficientSpec>().is_err());
        assert!("background=1; bump(width=0)".parse::<CoefficientSpec>().is_err());
        assert!("background=1; spike(center=0)".parse::<CoefficientSpec>().is_err());
        assert!("background=1; delta(centre=0)".parse::<CoefficientSpec>().is_err());
    }

    #[test]
    fn sampled_atoms_load_from_csv() {
        let grid = Grid::new(1, 2.0, 16).unwrap();
        let f = RealField::from_fn(grid, |x| x[0].cos() + 1.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        f.save(&path).unwrap();
        let text = format!("background=0.5; sampled(path=\"{}\")", path.display());
        let spec: CoefficientSpec = text.parse().unwrap();
        assert!(spec.is_regular());
        let s = spec.sample(&grid).unwrap();
        assert!((s.values()[3] - (0.5 + f.values()[3])).abs() < 1e-15);
        assert_eq!(spec.to_string(), text);
    }

    #[test]
    fn jump_profile_is_periodic_and_monotone_on_each_side() {
        let grid = Grid::new(1, 4.0, 64).unwrap();
        assert_eq!(jump_profile(&grid, 0.0), 1.0);
        assert_eq!(jump_profile(&grid, -1e-9), 0.0);
        assert!((jump_profile(&grid, 4.0 - 1e-12) - jump_profile(&grid, -4.0)).abs() < 1e-9);
        assert!((jump_profile(&grid, -4.0) - 0.5).abs() < 1e-12);
        assert_eq!(jump_profile(&grid, 2.0), 1.0);
        assert_eq!(jump_profile(&grid, -2.0), 0.0);
    }

    #[test]
    fn bump_profile_shape() {
        assert_eq!(bump_profile(0.0), 1.0);
        assert_eq!(bump_profile(1.0), 0.0);
        assert!(bump_profile(0.25) > bump_profile(0.5));
    }

    fn arb_spec() -> impl Strategy<Value = CoefficientSpec> {
        let atom = prop_oneof![
            (-3.0..3.0f64, -3.0..3.0f64, 0.0..5.0f64).prop_map(|(x, y, w)| Atom::Delta { center: [x, y], weight: w }),
            (-3.0..3.0f64, 0.0..5.0f64).prop_map(|(c, h)| Atom::Jump { center: c, height: h }),
            (-3.0..3.0f64, 0.1..2.0f64, 0.0..5.0f64).prop_map(|(c, w, h)| Atom::Bump { center: [c, 0.0], width: w, height: h }),
        ];
        (0.01..10.0f64, prop::collection::vec(atom, 0..4)).prop_map(|(b, atoms)| {
            atoms.into_iter().fold(CoefficientSpec::constant(b).unwrap(), |s, a| s.with_atom(a).unwrap())
        })
    }

    proptest! {
        #[test]
        fn text_form_round_trips(spec in arb_spec()) {
            let back: CoefficientSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
