//! Crank–Nicolson time stepping for `i u_t + L u = f`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::shifted::shifted_solve;
use super::operator::SpatialOperator;
use super::tridiag::CyclicTridiagonal;
use crate::coefficients::RegularizedCoefficient;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};

/// Relative residual for the iterative solves used in two dimensions.
///
/// Each solve leaks up to about this much relative norm, so over a few
/// thousand steps 1e-12 keeps the drift below 1e-10.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
const MAX_TOLERANCE: f64 = 1e-6;
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub final_time: f64,
    pub tolerance: f64,
    /// Snapshot every `stride` steps; 0 keeps only the endpoints.
    pub stride: usize,
}

impl StepperConfig {
    pub fn new(dt: f64, final_time: f64) -> Result<Self> {
        let cfg = Self { dt, final_time, tolerance: DEFAULT_TOLERANCE, stride: 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The operator's default step, capped at `final_time`.
    pub fn auto(op: &SpatialOperator, final_time: f64) -> Result<Self> {
        if !(final_time > 0.0) {
            return Err(Error::InvalidStepper(format!("final time must be positive, got {final_time}")));
        }
        Self::new(op.default_dt().min(final_time), final_time)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        self.tolerance = tolerance;
        self.validate()?;
        Ok(self)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.final_time.is_finite() && self.final_time > 0.0) {
            return Err(Error::InvalidStepper(format!("final time must be positive, got {}", self.final_time)));
        }
        if !(self.dt > 0.0 && self.dt <= self.final_time) {
            return Err(Error::InvalidStepper(format!("dt must lie in (0, T], got {}", self.dt)));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= MAX_TOLERANCE) {
            return Err(Error::InvalidStepper(format!("tolerance must lie in (0, 1e-6], got {}", self.tolerance)));
        }
        Ok(())
    }

    /// `0, dt, 2dt, …, T`, with the last interval shortened to land on `T`.
    pub fn step_times(&self) -> Vec<f64> {
        let ratio = self.final_time / self.dt;
        let steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) { ratio.round() } else { ratio.ceil() };
        let steps = (steps as usize).max(1);
        let mut times: Vec<f64> = (0..steps).map(|k| k as f64 * self.dt).collect();
        times.push(self.final_time);
        times
    }
}

/// Reusable CN engine bound to one operator. In one dimension the cyclic
/// factorization is cached per step size.
pub struct CrankNicolson<'a> {
    op: &'a SpatialOperator,
    tolerance: f64,
    cache: Vec<(f64, CyclicTridiagonal)>,
    iterations: usize,
}

impl<'a> CrankNicolson<'a> {
    pub fn new(op: &'a SpatialOperator, tolerance: f64) -> Self {
        Self { op, tolerance, cache: Vec::new(), iterations: 0 }
    }

    /// Total iterative-solver iterations so far (0 in one dimension).
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn factor(&mut self, tau: f64) -> &CyclicTridiagonal {
        if let Some(pos) = self.cache.iter().position(|(t, _)| *t == tau) {
            return &self.cache[pos].1;
        }
        let n = self.op.grid().len();
        let faces = self.op.faces(0);
        let lower: Vec<Complex64> = (0..n).map(|j| -I * tau * faces[(j + n - 1) % n]).collect();
        let upper: Vec<Complex64> = (0..n).map(|j| -I * tau * faces[j]).collect();
        let diag: Vec<Complex64> = self.op.diagonal().iter().map(|d| Complex64::new(1.0, -tau * d)).collect();
        if self.cache.len() >= 2 {
            self.cache.remove(0);
        }
        self.cache.push((tau, CyclicTridiagonal::new(&lower, &diag, &upper)));
        &self.cache.last().expect("just pushed").1
    }

    /// Solves `(I - iτL) x = rhs` in place, with `guess` seeding iterative solves.
    fn solve(&mut self, tau: f64, rhs: &mut Vec<Complex64>, guess: &[Complex64]) -> Result<()> {
        if self.op.grid().dim() == 1 {
            self.factor(tau).solve_in_place(rhs);
            return Ok(());
        }
        let op = self.op;
        let mut x = guess.to_vec();
        let max_iter = 10 * rhs.len() + 100;
        self.iterations += shifted_solve(|v, out| op.apply_slice(v, out), tau, rhs, &mut x, self.tolerance, max_iter)?;
        *rhs = x;
        Ok(())
    }

    fn rhs(&self, u: &ComplexField, tau: f64) -> Vec<Complex64> {
        let mut lu = vec![Complex64::default(); u.values().len()];
        self.op.apply_slice(u.values(), &mut lu);
        u.values().iter().zip(&lu).map(|(v, l)| v + I * tau * l).collect()
    }

    pub fn step(&mut self, u: &ComplexField, dt: f64) -> Result<ComplexField> {
        self.check(u)?;
        if dt == 0.0 {
            return Ok(u.clone());
        }
        let tau = 0.5 * dt;
        let mut rhs = self.rhs(u, tau);
        self.solve(tau, &mut rhs, u.values())?;
        ComplexField::new(*u.grid(), rhs)
    }

    /// One step of `i u_t + L u = f` with the trapezoidal source
    /// `-i(dt/2)(f(t) + f(t + dt))`.
    pub fn step_forced(&mut self, u: &ComplexField, dt: f64, f0: &ComplexField, f1: &ComplexField) -> Result<ComplexField> {
        self.check(u)?;
        if f0.grid() != u.grid() || f1.grid() != u.grid() {
            return Err(Error::GridMismatch);
        }
        if dt == 0.0 {
            return Ok(u.clone());
        }
        let tau = 0.5 * dt;
        let mut rhs = self.rhs(u, tau);
        for ((r, a), b) in rhs.iter_mut().zip(f0.values()).zip(f1.values()) {
            *r -= I * tau * (a + b);
        }
        self.solve(tau, &mut rhs, u.values())?;
        ComplexField::new(*u.grid(), rhs)
    }

    fn check(&self, u: &ComplexField) -> Result<()> {
        if u.grid() != self.op.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// `(I - i(dt/2)L)⁻¹ (I + i(dt/2)L) u`.
pub fn step_cn(op: &SpatialOperator, u: &ComplexField, dt: f64) -> Result<ComplexField> {
    if dt < 0.0 || !dt.is_finite() {
        return Err(Error::InvalidStepper(format!("dt must be non-negative, got {dt}")));
    }
    CrankNicolson::new(op, DEFAULT_TOLERANCE).step(u, dt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub index: usize,
    pub time: f64,
    pub field: ComplexField,
}

/// Norm series at every step plus strided snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTrace {
    times: Vec<f64>,
    l2: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    energy: Vec<f64>,
    snapshots: Vec<Snapshot>,
    final_field: ComplexField,
    iterations: usize,
}

struct Recorder<'a> {
    op: &'a SpatialOperator,
    stride: usize,
    last: usize,
    trace: SolutionTrace,
}

impl<'a> Recorder<'a> {
    fn new(op: &'a SpatialOperator, cfg: &StepperConfig, steps: usize, u0: &ComplexField) -> Self {
        let trace = SolutionTrace {
            times: Vec::with_capacity(steps + 1),
            l2: Vec::with_capacity(steps + 1),
            h1: Vec::with_capacity(steps + 1),
            h2: Vec::with_capacity(steps + 1),
            energy: Vec::with_capacity(steps + 1),
            snapshots: Vec::new(),
            final_field: u0.clone(),
            iterations: 0,
        };
        Self { op, stride: cfg.stride, last: steps, trace }
    }

    fn record(&mut self, index: usize, time: f64, u: &ComplexField) {
        let t = &mut self.trace;
        t.times.push(time);
        t.l2.push(u.l2_norm());
        t.h1.push(u.gradient().iter().map(|d| d.l2_norm().powi(2)).sum::<f64>().sqrt());
        t.h2.push(u.h2_norm());
        t.energy.push(self.op.energy_form(u));
        let strided = self.stride > 0 && index % self.stride == 0;
        if index == 0 || index == self.last || strided {
            t.snapshots.push(Snapshot { index, time, field: u.clone() });
        }
    }

    fn finish(mut self, u: ComplexField, iterations: usize) -> SolutionTrace {
        self.trace.final_field = u;
        self.trace.iterations = iterations;
        self.trace
    }
}

impl SolutionTrace {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn l2(&self) -> &[f64] {
        &self.l2
    }

    /// `‖∇u‖` from centered differences.
    pub fn h1(&self) -> &[f64] {
        &self.h1
    }

    pub fn h2(&self) -> &[f64] {
        &self.h2
    }

    /// `Σ_j ‖g^{1/2} D⁺_j u‖²` in the staggered form matching the stencil.
    pub fn energy_form(&self) -> &[f64] {
        &self.energy
    }

    /// `|‖u(t)‖ - ‖u₀‖| / ‖u₀‖`, identically zero for zero data.
    pub fn drift(&self) -> Vec<f64> {
        relative_drift(&self.l2)
    }

    pub fn max_drift(&self) -> f64 {
        self.drift().into_iter().fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> Vec<f64> {
        relative_drift(&self.energy)
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.energy_drift().into_iter().fold(0.0, f64::max)
    }

    pub fn sup_h2(&self) -> f64 {
        self.h2.iter().copied().fold(0.0, f64::max)
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn snapshot(&self, index: usize) -> Option<&ComplexField> {
        self.snapshots
            .binary_search_by_key(&index, |s| s.index)
            .ok()
            .map(|i| &self.snapshots[i].field)
    }

    pub fn final_field(&self) -> &ComplexField {
        &self.final_field
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("traces hold at least the initial time")
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Columns `t,l2,h2,energy_form,drift`, one row per step.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "l2", "h2", "energy_form", "drift"])?;
        for (k, d) in self.drift().into_iter().enumerate() {
            w.write_record(&[
                self.times[k].to_string(),
                self.l2[k].to_string(),
                self.h2[k].to_string(),
                self.energy[k].to_string(),
                d.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }

    /// Writes `<stem>_<index>.csv` into `dir` for every snapshot.
    pub fn save_snapshots(&self, dir: impl AsRef<Path>, stem: &str) -> Result<Vec<std::path::PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.snapshots
            .iter()
            .map(|s| {
                let path = dir.join(format!("{stem}_{:06}.csv", s.index));
                s.field.save(&path)?;
                Ok(path)
            })
            .collect()
    }
}

fn relative_drift(series: &[f64]) -> Vec<f64> {
    let first = series.first().copied().unwrap_or(0.0);
    if first == 0.0 {
        return series.iter().map(|v| v.abs()).collect();
    }
    series.iter().map(|v| (v - first).abs() / first).collect()
}

/// Right-hand side `f(t)` of `i u_t + L u = f`.
pub trait SourceTerm: Sync {
    fn grid(&self) -> &Grid;
    fn eval(&self, t: f64) -> Result<ComplexField>;

    /// Whether the source vanishes identically, letting solvers skip it.
    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct ZeroSource(pub Grid);

impl SourceTerm for ZeroSource {
    fn grid(&self) -> &Grid {
        &self.0
    }

    fn eval(&self, _t: f64) -> Result<ComplexField> {
        Ok(ComplexField::zeros(self.0))
    }

    fn is_zero(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
pub struct ConstantSource(pub ComplexField);

impl SourceTerm for ConstantSource {
    fn grid(&self) -> &Grid {
        self.0.grid()
    }

    fn eval(&self, _t: f64) -> Result<ComplexField> {
        Ok(self.0.clone())
    }
}

/// Closed-form source.
pub struct FnSource<F> {
    grid: Grid,
    f: F,
}

impl<F: Fn(f64) -> ComplexField + Sync> FnSource<F> {
    pub fn new(grid: Grid, f: F) -> Self {
        Self { grid, f }
    }
}

impl<F: Fn(f64) -> ComplexField + Sync> SourceTerm for FnSource<F> {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn eval(&self, t: f64) -> Result<ComplexField> {
        let field = (self.f)(t);
        if field.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(field)
    }
}

/// Piecewise-linear interpolation of recorded fields; exact at the knots.
#[derive(Debug, Clone)]
pub struct TraceSource {
    grid: Grid,
    times: Vec<f64>,
    fields: Vec<ComplexField>,
}

impl TraceSource {
    pub fn new(times: Vec<f64>, fields: Vec<ComplexField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::Precondition("trace source needs matching, non-empty times and fields".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("trace source times must increase strictly".into()));
        }
        let grid = *fields[0].grid();
        if fields.iter().any(|f| f.grid() != &grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, times, fields })
    }

    /// Applies `map` to every snapshot of `trace`.
    pub fn from_trace(trace: &SolutionTrace, map: impl Fn(&ComplexField) -> ComplexField) -> Result<Self> {
        let (times, fields) = trace.snapshots().iter().map(|s| (s.time, map(&s.field))).unzip();
        Self::new(times, fields)
    }
}

impl SourceTerm for TraceSource {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn eval(&self, t: f64) -> Result<ComplexField> {
        let (first, last) = (self.times[0], *self.times.last().expect("non-empty"));
        let slack = 1e-12 * last.abs().max(1.0);
        if t < first - slack || t > last + slack {
            return Err(Error::Precondition(format!("source requested at t={t} outside [{first}, {last}]")));
        }
        let k = self.times.partition_point(|&s| s < t - slack);
        if k < self.times.len() && (self.times[k] - t).abs() <= slack {
            return Ok(self.fields[k].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.fields[k - 1].zip_map(&self.fields[k], |a, b| a * (1.0 - w) + b * w))
    }
}

pub fn solve_homogeneous(op: &SpatialOperator, u0: &ComplexField, cfg: &StepperConfig) -> Result<SolutionTrace> {
    solve_forced(op, u0, &ZeroSource(*op.grid()), cfg)
}

pub fn solve_forced(op: &SpatialOperator, u0: &ComplexField, f: &dyn SourceTerm, cfg: &StepperConfig) -> Result<SolutionTrace> {
    cfg.validate()?;
    if u0.grid() != op.grid() || f.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    let times = cfg.step_times();
    let mut rec = Recorder::new(op, cfg, times.len() - 1, u0);
    let mut engine = CrankNicolson::new(op, cfg.tolerance);
    rec.record(0, times[0], u0);
    let forced = !f.is_zero();
    let mut u = u0.clone();
    let mut f_now = if forced { Some(f.eval(times[0])?) } else { None };
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        u = match f_now.take() {
            Some(f0) => {
                let f1 = f.eval(times[k])?;
                let next = engine.step_forced(&u, dt, &f0, &f1)?;
                f_now = Some(f1);
                next
            }
            None => engine.step(&u, dt)?,
        };
        rec.record(k, times[k], &u);
    }
    let iterations = engine.iterations();
    Ok(rec.finish(u, iterations))
}

/// `U(t) = S(t)v₀ + ∫₀ᵗ S(t - s)(-i f(s)) ds` with the trapezoid rule on the
/// step grid and `S` the discrete CN propagator, accumulated step by step.
pub fn duhamel_compose(op: &SpatialOperator, v0: &ComplexField, f: &dyn SourceTerm, cfg: &StepperConfig) -> Result<SolutionTrace> {
    cfg.validate()?;
    if v0.grid() != op.grid() || f.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    let times = cfg.step_times();
    let mut rec = Recorder::new(op, cfg, times.len() - 1, v0);
    let mut engine = CrankNicolson::new(op, cfg.tolerance);
    rec.record(0, times[0], v0);
    let mut v = v0.clone();
    // P_k = Σ_{m≤k} w_m S(t_k - s_m) g_m with g = -i f and trapezoid weights
    let mut p = ComplexField::zeros(*op.grid());
    let mut g_prev = f.eval(times[0])?.scale_complex(-I);
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        let g_next = f.eval(times[k])?.scale_complex(-I);
        v = engine.step(&v, dt)?;
        let carried = &p + &g_prev.scale(0.5 * dt);
        p = &engine.step(&carried, dt)? + &g_next.scale(0.5 * dt);
        rec.record(k, times[k], &(&v + &p));
        g_prev = g_next;
    }
    let iterations = engine.iterations();
    Ok(rec.finish(&v + &p, iterations))
}

/// Final value of the Duhamel formula evaluated literally: one homogeneous
/// evolution per quadrature node, run in parallel. Quadratic in the step
/// count; meant for cross-checks.
pub fn duhamel_quadrature(op: &SpatialOperator, v0: &ComplexField, f: &dyn SourceTerm, cfg: &StepperConfig) -> Result<ComplexField> {
    cfg.validate()?;
    let times = cfg.step_times();
    let m = times.len() - 1;
    let evolve = |start: usize, u: ComplexField| -> Result<ComplexField> {
        let mut engine = CrankNicolson::new(op, cfg.tolerance);
        (start + 1..=m).try_fold(u, |u, k| engine.step(&u, times[k] - times[k - 1]))
    };
    let terms: Vec<ComplexField> = (0..=m)
        .into_par_iter()
        .map(|k| {
            let left = if k > 0 { times[k] - times[k - 1] } else { 0.0 };
            let right = if k < m { times[k + 1] - times[k] } else { 0.0 };
            let g = f.eval(times[k])?.scale_complex(-I * (0.5 * (left + right)));
            evolve(k, g)
        })
        .collect::<Result<_>>()?;
    let homogeneous = evolve(0, v0.clone())?;
    Ok(terms.iter().fold(homogeneous, |acc, t| &acc + t))
}

/// Data `i L u₀` of the problem solved by `u_t`.
pub fn time_derivative_data(g: &RegularizedCoefficient, u0: &ComplexField) -> ComplexField {
    SpatialOperator::assemble(g, Default::default()).apply(u0).scale_complex(I)
}
