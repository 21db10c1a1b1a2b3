//! Uniform periodic grids, fields sampled on them, periodic finite
//! differences and the discrete norms used throughout the crate.
//!
//! A grid covers the box `[-L, L)^d` with `n` nodes per axis, `x_j = -L + j h`
//! and `h = 2L / n`. Node `n` is identified with node `0`. In two dimensions
//! nodes are stored row-major with axis 0 as the slow index.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of nodes per axis.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} unsupported, expected 1 or 2")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("need at least {MIN_POINTS} points per axis, got {n}")));
        }
        Ok(Self { dim, half_width, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Period of the box along every axis.
    pub fn period(&self) -> f64 {
        2.0 * self.half_width
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one node, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.h()
    }

    /// Per-axis indices of a flat node index.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] * self.n + idx[1],
        }
    }

    /// Physical coordinates of a node; the second entry is zero in 1D.
    pub fn node(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(flat);
        match self.dim {
            1 => [self.coord(i), 0.0],
            _ => [self.coord(i), self.coord(j)],
        }
    }

    /// Flat index of the periodic neighbour of `flat` one step along `axis`.
    pub fn neighbor(&self, flat: usize, axis: usize, forward: bool) -> usize {
        let mut idx = self.multi_index(flat);
        let n = self.n;
        idx[axis] = if forward { (idx[axis] + 1) % n } else { (idx[axis] + n - 1) % n };
        self.flat_index(idx)
    }

    /// Maps a displacement onto its minimum image in `[-L, L)`.
    pub fn wrap(&self, disp: f64) -> f64 {
        let p = self.period();
        let mut s = (disp + self.half_width).rem_euclid(p) - self.half_width;
        if s >= self.half_width {
            s -= p;
        }
        s
    }

    /// Same box with `factor` times as many points per axis.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Self::new(self.dim, self.half_width, self.n * factor)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} L={} n={}", self.dim, self.half_width, self.n)
    }
}

/// Values a field may hold.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn norm_sqr(self) -> f64;
    fn is_finite(self) -> bool;

    fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn is_finite(self) -> bool {
        Complex64::is_finite(self)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

/// Grid-sampled values.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    values: Vec<T>,
}

pub type ComplexField = Field<Complex64>;
pub type RealField = Field<f64>;

impl<T: Scalar> Field<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid {grid} has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![T::zero(); grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> T) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.node(k))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: Scalar, V: Scalar>(&self, other: &Field<U>, f: impl Fn(T, U) -> V) -> Field<V> {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Field { grid: self.grid, values }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    fn stencil(&self, axis: usize, f: impl Fn(T, T, T) -> T) -> Self {
        assert!(axis < self.grid.dim, "axis {axis} out of range");
        let g = &self.grid;
        let values = (0..g.len())
            .map(|k| {
                let back = self.values[g.neighbor(k, axis, false)];
                let fwd = self.values[g.neighbor(k, axis, true)];
                f(back, self.values[k], fwd)
            })
            .collect();
        Self { grid: self.grid, values }
    }

    /// `(u_{j+1} - u_j) / h` along `axis`.
    pub fn forward_diff(&self, axis: usize) -> Self {
        let inv_h = 1.0 / self.grid.h();
        self.stencil(axis, |_, c, f| (f - c) * inv_h)
    }

    /// `(u_j - u_{j-1}) / h` along `axis`.
    pub fn backward_diff(&self, axis: usize) -> Self {
        let inv_h = 1.0 / self.grid.h();
        self.stencil(axis, |b, c, _| (c - b) * inv_h)
    }

    /// `(u_{j+1} - u_{j-1}) / 2h` along `axis`.
    pub fn centered_diff(&self, axis: usize) -> Self {
        let s = 0.5 / self.grid.h();
        self.stencil(axis, |b, _, f| (f - b) * s)
    }

    /// Centered differences, one field per axis.
    pub fn gradient(&self) -> Vec<Self> {
        (0..self.grid.dim).map(|a| self.centered_diff(a)).collect()
    }

    /// Second-difference Laplacian summed over axes.
    pub fn laplacian(&self) -> Self {
        let s = 1.0 / (self.grid.h() * self.grid.h());
        let mut out = Self::zeros(self.grid);
        for axis in 0..self.grid.dim {
            let d2 = self.stencil(axis, |b, c, f| (f - c * 2.0 + b) * s);
            for (o, v) in out.values.iter_mut().zip(d2.values) {
                *o = *o + v;
            }
        }
        out
    }

    /// Discrete L² norm `(h^d Σ |u_j|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (self.grid.cell_volume() * sum).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// L² norm of the gradient summed over axes, `‖Σ_j ∂_j u‖`.
    pub fn gradient_sum_norm(&self) -> f64 {
        let mut sum = Self::zeros(self.grid);
        for d in self.gradient() {
            sum = &sum + &d;
        }
        sum.l2_norm()
    }

    /// `‖u‖ + ‖Σ_j ∂_j u‖ + ‖Δu‖`, with the axis sum taken inside the norm.
    pub fn h2_norm(&self) -> f64 {
        self.l2_norm() + self.gradient_sum_norm() + self.laplacian().l2_norm()
    }

    /// `max |f_j| + max_{axis, j} |centered difference|`.
    pub fn w1inf_norm(&self) -> f64 {
        let grad_sup = self.gradient().iter().map(Field::max_abs).fold(0.0, f64::max);
        self.max_abs() + grad_sup
    }

    /// Shifts the field by a whole number of cells along `axis`:
    /// `out_j = u_{j - cells}`.
    pub fn translate(&self, axis: usize, cells: isize) -> Self {
        let g = &self.grid;
        let n = g.n as isize;
        let mut values = vec![T::zero(); g.len()];
        for (k, v) in values.iter_mut().enumerate() {
            let mut idx = g.multi_index(k);
            idx[axis] = ((idx[axis] as isize - cells).rem_euclid(n)) as usize;
            *v = self.values[g.flat_index(idx)];
        }
        Self { grid: self.grid, values }
    }
}

impl<'a, T: Scalar> Add for &'a Field<T> {
    type Output = Field<T>;
    fn add(self, rhs: Self) -> Field<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<'a, T: Scalar> Sub for &'a Field<T> {
    type Output = Field<T>;
    fn sub(self, rhs: Self) -> Field<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl ComplexField {
    /// `h^d Σ u_j conj(v_j)`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let sum: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(sum * self.grid.cell_volume())
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }

    pub fn re(&self) -> RealField {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|v| v.im)
    }
}

impl RealField {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid quadrature `h^d Σ f_j`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| Complex64::new(v, 0.0))
    }

    /// Periodic multilinear interpolation at an arbitrary point.
    pub fn interpolate(&self, x: [f64; 2]) -> f64 {
        let g = &self.grid;
        let n = g.n;
        let locate = |c: f64| {
            let s = (c + g.half_width).rem_euclid(g.period()) / g.h();
            let i = (s.floor() as usize) % n;
            (i, (i + 1) % n, s - s.floor())
        };
        match g.dim {
            1 => {
                let (i0, i1, t) = locate(x[0]);
                self.values[i0] * (1.0 - t) + self.values[i1] * t
            }
            _ => {
                let (i0, i1, t) = locate(x[0]);
                let (j0, j1, u) = locate(x[1]);
                let at = |i, j| self.values[g.flat_index([i, j])];
                at(i0, j0) * (1.0 - t) * (1.0 - u)
                    + at(i1, j0) * t * (1.0 - u)
                    + at(i0, j1) * (1.0 - t) * u
                    + at(i1, j1) * t * u
            }
        }
    }

    /// Restriction to a coarser grid by injection at coincident nodes.
    pub fn inject(&self, coarse: Grid) -> Result<RealField> {
        inject_values(self, coarse)
    }
}

impl ComplexField {
    /// Restriction to a coarser grid by injection at coincident nodes.
    pub fn inject(&self, coarse: Grid) -> Result<ComplexField> {
        inject_values(self, coarse)
    }
}

fn inject_values<T: Scalar>(fine: &Field<T>, coarse: Grid) -> Result<Field<T>> {
    let g = fine.grid;
    if coarse.dim != g.dim || coarse.half_width != g.half_width || coarse.n == 0 || g.n % coarse.n != 0 {
        return Err(Error::GridMismatch);
    }
    let r = g.n / coarse.n;
    let values = (0..coarse.len())
        .map(|k| {
            let [i, j] = coarse.multi_index(k);
            fine.values[g.flat_index([i * r, j * r])]
        })
        .collect();
    Ok(Field { grid: coarse, values })
}

// CSV layout: a `# d=.. L=.. n=..` line, a column header, then one row per
// node with the per-axis indices followed by the value columns.

fn header_columns(dim: usize, value_cols: &[&str]) -> Vec<String> {
    let axes = ["i", "j"];
    axes[..dim].iter().chain(value_cols).map(|s| s.to_string()).collect()
}

fn write_field_csv<T: Scalar, W: Write>(
    field: &Field<T>,
    mut out: W,
    value_cols: &[&str],
    cols: impl Fn(T) -> Vec<f64>,
) -> Result<()> {
    let g = field.grid;
    writeln!(out, "# d={} L={} n={}", g.dim, g.half_width, g.n)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header_columns(g.dim, value_cols))?;
    for (k, &v) in field.values.iter().enumerate() {
        let idx = g.multi_index(k);
        let mut rec: Vec<String> = idx[..g.dim].iter().map(|i| i.to_string()).collect();
        rec.extend(cols(v).into_iter().map(|x| x.to_string()));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_grid_line(line: &str) -> Result<Grid> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("field csv must start with `# d=.. L=.. n=..`".into()))?;
    let (mut d, mut l, mut n) = (None, None, None);
    for tok in body.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad grid token `{tok}`")))?;
        let bad = |_| Error::Parse(format!("bad grid value `{tok}`"));
        match k {
            "d" => d = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "L" => l = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "n" => n = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            _ => return Err(Error::Parse(format!("unknown grid key `{k}`"))),
        }
    }
    match (d, l, n) {
        (Some(d), Some(l), Some(n)) => Grid::new(d, l, n),
        _ => Err(Error::Parse("grid line needs d, L and n".into())),
    }
}

fn read_field_csv<T: Scalar, R: Read>(
    input: R,
    value_cols: usize,
    build: impl Fn(&[f64]) -> T,
) -> Result<Field<T>> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let grid = parse_grid_line(&first)?;
    let mut values = vec![T::zero(); grid.len()];
    let mut seen = vec![false; grid.len()];
    let mut rdr = csv::Reader::from_reader(reader);
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != grid.dim + value_cols {
            return Err(Error::Parse(format!("expected {} columns, got {}", grid.dim + value_cols, rec.len())));
        }
        let mut idx = [0usize; 2];
        for (a, slot) in idx.iter_mut().enumerate().take(grid.dim) {
            *slot = rec[a].trim().parse().map_err(|_| Error::Parse(format!("bad index `{}`", &rec[a])))?;
            if *slot >= grid.n {
                return Err(Error::Parse(format!("index {} out of range", *slot)));
            }
        }
        let nums = (grid.dim..rec.len())
            .map(|c| rec[c].trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad value `{}`", &rec[c]))))
            .collect::<Result<Vec<_>>>()?;
        let k = grid.flat_index(idx);
        values[k] = build(&nums);
        seen[k] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Parse("field csv does not cover every node".into()));
    }
    Field::new(grid, values)
}

impl ComplexField {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_field_csv(self, out, &["re", "im"], |v| vec![v.re, v.im])
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        read_field_csv(input, 2, |v| Complex64::new(v[0], v[1]))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

impl RealField {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_field_csv(self, out, &["value"], |v| vec![v])
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        read_field_csv(input, 1, |v| v[0])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mode(grid: Grid, k: f64) -> ComplexField {
        ComplexField::from_fn(grid, |x| Complex64::new(0.0, k * x[0]).exp())
    }

    #[test]
    fn build_grid_examples() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        assert_eq!(g.h(), 0.25);
        let nodes: Vec<f64> = (0..8).map(|j| g.coord(j)).collect();
        assert_eq!(nodes, vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75]);

        let g = Grid::new(1, PI, 16).unwrap();
        assert!((g.h() - PI / 8.0).abs() < 1e-15);
        assert!((g.h() * 16.0 - 2.0 * PI).abs() <= f64::EPSILON * 2.0 * PI);

        assert_eq!(Grid::new(2, 1.0, 8).unwrap().len(), 64);
    }

    #[test]
    fn build_grid_rejects_bad_input() {
        assert!(Grid::new(1, 0.0, 16).is_err());
        assert!(Grid::new(1, -1.0, 16).is_err());
        assert!(Grid::new(1, 1.0, 4).is_err());
        assert!(Grid::new(3, 1.0, 16).is_err());
    }

    #[test]
    fn periodic_neighbours_wrap() {
        let g = Grid::new(2, 1.0, 8).unwrap();
        assert_eq!(g.neighbor(g.flat_index([7, 3]), 0, true), g.flat_index([0, 3]));
        assert_eq!(g.neighbor(g.flat_index([2, 0]), 1, false), g.flat_index([2, 7]));
        assert!((g.wrap(1.5) + 0.5).abs() < 1e-15);
        assert!((g.wrap(-1.0) + 1.0).abs() < 1e-15);
        assert!((g.wrap(1.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn l2_norm_examples() {
        let g = Grid::new(1, 0.5, 16).unwrap();
        assert_eq!(ComplexField::zeros(g).l2_norm(), 0.0);
        let one = ComplexField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        assert!((one.l2_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_l2_norm_matches_fine_quadrature() {
        let gauss = |x: f64| (-x * x).exp();
        let g = Grid::new(1, 8.0, 1024).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new(gauss(x[0]), 0.0));
        // oracle: trapezoid at 8x resolution on the same box
        let m = 8 * 1024;
        let hf = 16.0 / m as f64;
        let oracle = ((0..m).map(|j| gauss(-8.0 + j as f64 * hf).powi(2)).sum::<f64>() * hf).sqrt();
        assert!((u.l2_norm() - oracle).abs() / oracle < 1e-12);
        assert!((oracle - (PI / 2.0).powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_mode_matches_discrete_symbol() {
        let g = Grid::new(1, PI, 64).unwrap();
        let k = 3.0;
        let u = mode(g, k);
        let du = &u.gradient()[0];
        let sym = Complex64::new(0.0, (k * g.h()).sin() / g.h());
        for (d, v) in du.values().iter().zip(u.values()) {
            assert!((d - sym * v).norm() <= 1e-12 * sym.norm());
        }
    }

    #[test]
    fn sine_derivatives_converge_at_second_order() {
        let l = 2.0;
        let errs: Vec<(f64, f64, f64)> = [32usize, 64, 128]
            .iter()
            .map(|&n| {
                let g = Grid::new(1, l, n).unwrap();
                let w = PI / l;
                let u = RealField::from_fn(g, |x| (w * x[0]).sin());
                let de = u
                    .centered_diff(0)
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(j, v)| (v - w * (w * g.coord(j)).cos()).abs())
                    .fold(0.0, f64::max);
                let le = u
                    .laplacian()
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(j, v)| (v + w * w * (w * g.coord(j)).sin()).abs())
                    .fold(0.0, f64::max);
                (g.h(), de, le)
            })
            .collect();
        // leading truncation terms w³h²/6 and w⁴h²/12
        let w = PI / l;
        for (h, de, le) in &errs {
            assert!(*de <= 1.01 * w.powi(3) / 6.0 * h * h, "gradient error {de} at h={h}");
            assert!(*le <= 1.01 * w.powi(4) / 12.0 * h * h, "laplacian error {le} at h={h}");
        }
        for w in errs.windows(2) {
            assert!((w[0].1 / w[1].1).log2() > 1.9);
            assert!((w[0].2 / w[1].2).log2() > 1.9);
        }
    }

    #[test]
    fn laplacian_of_mode_matches_discrete_symbol() {
        let g = Grid::new(1, 4.0, 128).unwrap();
        let k = 2.0 * PI * 5.0 / g.period();
        let u = mode(g, k);
        let lu = u.laplacian();
        let h = g.h();
        let sym = -(4.0 / (h * h)) * (k * h / 2.0).sin().powi(2);
        for (d, v) in lu.values().iter().zip(u.values()) {
            assert!((d - v * sym).norm() <= 1e-12 * sym.abs());
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let g = Grid::new(2, 1.5, 16).unwrap();
        let c = ComplexField::from_fn(g, |_| Complex64::new(0.3, -2.0));
        assert!(c.gradient().iter().all(|d| d.max_abs() == 0.0));
        assert_eq!(c.laplacian().max_abs(), 0.0);
    }

    #[test]
    fn h2_norm_collapses_in_one_dimension() {
        assert_eq!(ComplexField::zeros(Grid::new(1, 1.0, 16).unwrap()).h2_norm(), 0.0);
        let g = Grid::new(1, 6.0, 256).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.2 * x[0].sin()));
        let expect = u.l2_norm() + u.centered_diff(0).l2_norm() + u.laplacian().l2_norm();
        assert!((u.h2_norm() - expect).abs() < 1e-13 * expect);
    }

    #[test]
    fn gaussian_h2_norm_matches_quadrature_oracle() {
        // u = e^{-x²}: u' = -2x u, u'' = (4x² - 2) u; integrate on an 8x finer trapezoid grid
        let g = Grid::new(1, 8.0, 1024).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
        let m = 8 * 1024;
        let hf = 16.0 / m as f64;
        let quad = |f: &dyn Fn(f64) -> f64| ((0..m).map(|j| f(-8.0 + j as f64 * hf).powi(2)).sum::<f64>() * hf).sqrt();
        let oracle = quad(&|x| (-x * x).exp())
            + quad(&|x| -2.0 * x * (-x * x).exp())
            + quad(&|x| (4.0 * x * x - 2.0) * (-x * x).exp());
        assert!((u.h2_norm() - oracle).abs() / oracle < 1e-3);
    }

    #[test]
    fn w1inf_norm_examples() {
        let g = Grid::new(1, 1.0, 32).unwrap();
        let c = RealField::from_fn(g, |_| -2.5);
        assert_eq!(c.w1inf_norm(), 2.5);
        // the identity map is not periodic: the seam contributes a large difference
        let saw = RealField::from_fn(g, |x| x[0]);
        let interior = 1.0 + 1.0;
        assert!(saw.w1inf_norm() > interior * 5.0);
    }

    #[test]
    fn inner_product_examples() {
        let g = Grid::new(1, PI, 32).unwrap();
        let a = mode(g, 2.0);
        let b = mode(g, 5.0);
        assert!(a.inner(&b).unwrap().norm() < 1e-13);
        let u = ComplexField::from_fn(g, |x| Complex64::new(x[0].cos(), (2.0 * x[0]).sin()));
        let v = ComplexField::from_fn(g, |x| Complex64::new(0.5, x[0].sin()));
        assert!((u.inner(&u).unwrap().re - u.l2_norm().powi(2)).abs() < 1e-12);
        assert!((u.inner(&v).unwrap() - v.inner(&u).unwrap().conj()).norm() < 1e-13);
        let other = ComplexField::zeros(Grid::new(1, PI, 64).unwrap());
        assert!(matches!(u.inner(&other), Err(Error::GridMismatch)));
    }

    #[test]
    fn field_rejects_non_finite_and_wrong_length() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        assert!(RealField::new(g, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(RealField::new(g, v), Err(Error::NonFinite)));
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::new(2, 1.25, 8).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new(x[0] * 0.1, x[1].sin()));
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# d=2 L=1.25 n=8\ni,j,re,im\n"));
        assert_eq!(ComplexField::read_csv(buf.as_slice()).unwrap(), u);

        let f = RealField::from_fn(Grid::new(1, 2.0, 16).unwrap(), |x| x[0].exp());
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(RealField::read_csv(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn injection_picks_coincident_nodes() {
        let coarse = Grid::new(1, 2.0, 16).unwrap();
        let fine = coarse.refine(4).unwrap();
        let f = RealField::from_fn(fine, |x| x[0].sin());
        let c = f.inject(coarse).unwrap();
        for (j, v) in c.values().iter().enumerate() {
            assert!((*v - coarse.coord(j).sin()).abs() < 1e-14);
        }
    }
}
