//! Verification campaigns over `ε`-ladders.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::fit::{fit_rate, RateFit, RateReport};
use super::report::{num, PlotSpec, Report};
use crate::coefficients::{
    regularize, CoefficientSpec, EpsilonLadder, Mollifier, MollifierKind, RegularizedCoefficient,
};
use crate::error::{Error, Result};
use crate::evolution::{duhamel_compose, solve_homogeneous, SpatialOperator, StepperConfig, TraceSource};
use crate::grid::Grid;
use crate::oracle::fine_grid_reference;
use crate::problem::{Problem, TimeSettings, TimeStep};

fn ladder_json(ladder: &EpsilonLadder) -> Value {
    json!(ladder.values())
}

fn grid_json(grid: &Grid) -> Value {
    json!({ "d": grid.dim(), "L": grid.half_width(), "n": grid.n() })
}

/// Relative `L²` drift and the conserved gradient form of one solve.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyLedger {
    pub config: Value,
    pub dt: f64,
    pub steps: usize,
    pub times: Vec<f64>,
    pub drift: Vec<f64>,
    pub max_drift: f64,
    pub energy_form: Vec<f64>,
    pub max_energy_drift: f64,
}

pub fn run_energy(problem: &Problem) -> Result<EnergyLedger> {
    let solved = problem.solve()?;
    let trace = &solved.trace;
    let mut config = problem.describe();
    config["stepper"]["dt_resolved"] = json!(solved.stepper.dt);
    Ok(EnergyLedger {
        config,
        dt: solved.stepper.dt,
        steps: trace.len() - 1,
        times: trace.times().to_vec(),
        drift: trace.drift(),
        max_drift: trace.max_drift(),
        energy_form: trace.energy_form().to_vec(),
        max_energy_drift: trace.max_energy_drift(),
    })
}

impl Report for EnergyLedger {
    fn name(&self) -> String {
        "energy".into()
    }

    fn columns(&self) -> Vec<&'static str> {
        vec!["t", "drift", "energy_form"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        (0..self.times.len())
            .map(|k| vec![num(self.times[k]), num(self.drift[k]), num(self.energy_form[k])])
            .collect()
    }

    fn metadata(&self) -> Value {
        json!({
            "campaign": "energy",
            "config": self.config,
            "dt": self.dt,
            "steps": self.steps,
            "max_drift": self.max_drift,
            "max_energy_drift": self.max_energy_drift,
        })
    }

    fn plot(&self) -> Option<PlotSpec> {
        Some(PlotSpec { title: "relative L2 drift".into(), x: 0, ys: vec![1], log_x: false, log_y: false })
    }
}

/// `W^{1,∞}` growth of `g_ε`, optionally with the `H²` growth of `u_ε`.
#[derive(Debug, Clone, Serialize)]
pub struct ModeratenessReport {
    pub config: Value,
    pub coefficient: RateReport,
    pub solution: Option<RateReport>,
}

pub fn run_moderateness(spec: &CoefficientSpec, mollifier: &Mollifier, ladder: &EpsilonLadder, grid: &Grid) -> Result<ModeratenessReport> {
    let pairs = crate::coefficients::moderateness_ladder(spec, mollifier, ladder, grid)?;
    Ok(ModeratenessReport {
        config: json!({
            "coefficient": spec.to_string(),
            "mollifier": mollifier.kind().name(),
            "grid": grid_json(grid),
            "ladder": ladder_json(ladder),
        }),
        coefficient: RateReport::growth(pairs),
        solution: None,
    })
}

/// As [`run_moderateness`], also solving at every scale and fitting the
/// growth of `sup_t ‖u_ε(t)‖_{H²}`.
pub fn run_moderateness_with_solution(problem: &Problem, ladder: &EpsilonLadder) -> Result<ModeratenessReport> {
    let mut report = run_moderateness(&problem.coefficient, &Mollifier::new(problem.mollifier), ladder, &problem.grid)?;
    let pairs: Vec<(f64, f64)> = ladder
        .values()
        .par_iter()
        .map(|&eps| Ok((eps, problem.clone().with_epsilon(eps).solve()?.trace.sup_h2())))
        .collect::<Result<_>>()?;
    report.solution = Some(RateReport::growth(pairs));
    report.config = json!({ "problem": problem.describe(), "ladder": ladder_json(ladder) });
    Ok(report)
}

impl Report for ModeratenessReport {
    fn name(&self) -> String {
        "moderateness".into()
    }

    fn columns(&self) -> Vec<&'static str> {
        vec!["eps", "w1inf", "sup_h2"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.coefficient
            .pairs
            .iter()
            .enumerate()
            .map(|(k, (e, v))| {
                let h2 = self.solution.as_ref().map(|s| num(s.pairs[k].1)).unwrap_or_default();
                vec![num(*e), num(*v), h2]
            })
            .collect()
    }

    fn metadata(&self) -> Value {
        json!({
            "campaign": "moderateness",
            "config": self.config,
            "coefficient": self.coefficient,
            "exponent": self.coefficient.rate(),
            "solution": self.solution,
        })
    }

    fn plot(&self) -> Option<PlotSpec> {
        let ys = if self.solution.is_some() { vec![1, 2] } else { vec![1] };
        Some(PlotSpec { title: "moderateness".into(), x: 0, ys, log_x: true, log_y: true })
    }
}

/// Common step for a set of operators: the resolved step of the most
/// restrictive one.
fn common_step(time: &TimeSettings, ops: &[&SpatialOperator]) -> Result<StepperConfig> {
    let mut best: Option<StepperConfig> = None;
    for op in ops {
        let cfg = time.resolve(op)?;
        if best.is_none_or(|b| cfg.dt < b.dt) {
            best = Some(cfg);
        }
    }
    best.ok_or_else(|| Error::Precondition("no operators to step".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub config: Value,
    pub mollifiers: (MollifierKind, MollifierKind),
    pub eps: Vec<f64>,
    /// `‖u_ε(T) - ũ_ε(T)‖_{L²}`.
    pub differences: Vec<f64>,
    /// `‖g_ε - g̃_ε‖_{W^{1,∞}}`.
    pub coefficient_differences: Vec<f64>,
    pub dt: f64,
    /// Self-convergence of the difference at the smallest scale.
    pub scheme_error: f64,
    /// `None` when the mollifiers coincide and every difference vanishes.
    pub decay: Option<RateReport>,
    pub coefficient_decay: Option<RateReport>,
}

fn difference_at(problem: &Problem, other: MollifierKind, eps: f64, cfg: &StepperConfig) -> Result<(f64, f64)> {
    let a = problem.clone().with_epsilon(eps);
    let b = a.clone().with_mollifier(other);
    let (ga, gb) = (a.coefficient_field()?, b.coefficient_field()?);
    let ua = solve_homogeneous(&SpatialOperator::assemble(&ga, problem.mean), &a.initial_data()?, cfg)?;
    let ub = solve_homogeneous(&SpatialOperator::assemble(&gb, problem.mean), &b.initial_data()?, cfg)?;
    Ok(((ua.final_field() - ub.final_field()).l2_norm(), (ga.field() - gb.field()).w1inf_norm()))
}

/// Solves both regularized families along the ladder and reports the decay
/// of their difference at the final time. Nothing is asserted about rates.
pub fn run_uniqueness(problem: &Problem, other: MollifierKind, ladder: &EpsilonLadder) -> Result<UniquenessReport> {
    ladder.check_resolved(&problem.grid)?;
    let mollifiers = (problem.mollifier, other);
    // one step size for every solve, so that time-stepping error is shared
    let ops: Vec<SpatialOperator> = ladder
        .values()
        .iter()
        .flat_map(|&eps| [problem.mollifier, other].map(|m| (eps, m)))
        .map(|(eps, m)| problem.clone().with_epsilon(eps).with_mollifier(m).operator())
        .collect::<Result<_>>()?;
    let cfg = common_step(&problem.time, &ops.iter().collect::<Vec<_>>())?.with_stride(0);
    let rows: Vec<(f64, f64)> =
        ladder.values().par_iter().map(|&eps| difference_at(problem, other, eps, &cfg)).collect::<Result<_>>()?;
    let differences: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let coefficient_differences: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let eps = ladder.values().to_vec();
    let identical = differences.iter().chain(&coefficient_differences).all(|v| *v == 0.0);
    let (scheme_error, decay, coefficient_decay) = if identical {
        (0.0, None, None)
    } else {
        let refined = problem.clone().with_grid(problem.grid.refine(2)?);
        let fine_cfg = StepperConfig { dt: cfg.dt / 2.0, ..cfg };
        let (fine, _) = difference_at(&refined, other, ladder.smallest(), &fine_cfg)?;
        let scheme_error = (fine - differences[differences.len() - 1]).abs();
        let pairs = eps.iter().copied().zip(differences.iter().copied()).collect();
        let cpairs = eps.iter().copied().zip(coefficient_differences.iter().copied()).collect();
        (scheme_error, Some(RateReport::decay(pairs, Some(scheme_error))), Some(RateReport::decay(cpairs, None)))
    };
    let mut config = problem.describe();
    config["second_mollifier"] = json!(other.name());
    config["ladder"] = ladder_json(ladder);
    config["stepper"]["dt_resolved"] = json!(cfg.dt);
    Ok(UniquenessReport { config, mollifiers, eps, differences, coefficient_differences, dt: cfg.dt, scheme_error, decay, coefficient_decay })
}

impl Report for UniquenessReport {
    fn name(&self) -> String {
        "uniqueness".into()
    }

    fn columns(&self) -> Vec<&'static str> {
        vec!["eps", "solution_difference", "coefficient_difference", "floored"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        (0..self.eps.len())
            .map(|k| {
                let floored = self.decay.as_ref().map(|d| d.floored[k]).unwrap_or(false);
                vec![num(self.eps[k]), num(self.differences[k]), num(self.coefficient_differences[k]), floored.to_string()]
            })
            .collect()
    }

    fn metadata(&self) -> Value {
        json!({
            "campaign": "uniqueness",
            "config": self.config,
            "mollifiers": [self.mollifiers.0.name(), self.mollifiers.1.name()],
            "dt": self.dt,
            "scheme_error": self.scheme_error,
            "decay_order": self.decay.as_ref().and_then(|d| d.rate()),
            "decay": self.decay,
            "coefficient_decay": self.coefficient_decay,
        })
    }

    fn plot(&self) -> Option<PlotSpec> {
        Some(PlotSpec { title: "uniqueness".into(), x: 0, ys: vec![1, 2], log_x: true, log_y: true })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub config: Value,
    pub reference: String,
    pub eps: Vec<f64>,
    /// `‖u_ε(T) - u_ref(T)‖_{L²}`.
    pub errors: Vec<f64>,
    /// `‖g_ε - g‖_{W^{1,∞}}`.
    pub hypothesis: Vec<f64>,
    /// `‖u_{0,ε} - u₀‖_{L²}`.
    pub data_errors: Vec<f64>,
    pub dt: f64,
    /// Coarse-grid error of the unmollified problem against the reference.
    pub scheme_error: f64,
    pub solution: RateReport,
    pub hypothesis_fit: RateReport,
    /// Errors shrink along the ladder down to the floor, within 10%.
    pub non_increasing: bool,
}

/// Convergence of `u_ε` to the classical solution for a regular `g`.
pub fn run_consistency(problem: &Problem, ladder: &EpsilonLadder, refinement: usize) -> Result<ConsistencyReport> {
    if !problem.coefficient.is_regular() {
        return Err(Error::Precondition(
            "consistency needs a W^{1,inf} coefficient: remove delta and jump atoms so that a classical solution exists"
                .into(),
        ));
    }
    ladder.check_resolved(&problem.grid)?;
    let base = Problem { epsilon: None, ..problem.clone() };
    let reference = fine_grid_reference(&base, refinement)?;
    let dt = reference.dt.expect("fine-grid references record their step");
    let scheme_error = reference.coarse_discrepancy.expect("fine-grid references record the coarse discrepancy");
    let fixed = base.clone().with_time(TimeSettings { dt: TimeStep::Fixed(dt), ..problem.time });
    let g = RegularizedCoefficient::sampled(&problem.coefficient, &problem.grid)?;
    let u0 = base.initial_data()?;
    let rows: Vec<(f64, f64, f64)> = ladder
        .values()
        .par_iter()
        .map(|&eps| {
            let p = fixed.clone().with_epsilon(eps);
            let solved = p.solve()?;
            let g_eps = regularize(&p.coefficient, &Mollifier::new(p.mollifier), eps, &p.grid)?;
            Ok((
                (solved.trace.final_field() - &reference.field).l2_norm(),
                (g_eps.field() - g.field()).w1inf_norm(),
                (&solved.u0 - &u0).l2_norm(),
            ))
        })
        .collect::<Result<_>>()?;
    let eps = ladder.values().to_vec();
    let errors: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let hypothesis: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let data_errors: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let solution = RateReport::decay(eps.iter().copied().zip(errors.iter().copied()).collect(), Some(scheme_error));
    let hypothesis_fit = RateReport::decay(eps.iter().copied().zip(hypothesis.iter().copied()).collect(), None);
    let non_increasing = (1..errors.len()).all(|k| solution.floored[k] || errors[k] <= 1.1 * errors[k - 1]);
    let mut config = problem.describe();
    config["ladder"] = ladder_json(ladder);
    config["refinement"] = json!(refinement);
    config["stepper"]["dt_resolved"] = json!(dt);
    Ok(ConsistencyReport {
        config,
        reference: format!("fine_grid x{refinement}, coefficient sampled pointwise"),
        eps,
        errors,
        hypothesis,
        data_errors,
        dt,
        scheme_error,
        solution,
        hypothesis_fit,
        non_increasing,
    })
}

impl Report for ConsistencyReport {
    fn name(&self) -> String {
        "consistency".into()
    }

    fn columns(&self) -> Vec<&'static str> {
        vec!["eps", "solution_error", "coefficient_error", "data_error", "floored"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        (0..self.eps.len())
            .map(|k| {
                vec![
                    num(self.eps[k]),
                    num(self.errors[k]),
                    num(self.hypothesis[k]),
                    num(self.data_errors[k]),
                    self.solution.floored[k].to_string(),
                ]
            })
            .collect()
    }

    fn metadata(&self) -> Value {
        json!({
            "campaign": "consistency",
            "config": self.config,
            "reference": self.reference,
            "dt": self.dt,
            "scheme_error": self.scheme_error,
            "solution_order": self.solution.rate(),
            "hypothesis_order": self.hypothesis_fit.rate(),
            "solution": self.solution,
            "hypothesis": self.hypothesis_fit,
            "non_increasing": self.non_increasing,
        })
    }

    fn plot(&self) -> Option<PlotSpec> {
        Some(PlotSpec { title: "consistency".into(), x: 0, ys: vec![1, 2, 3], log_x: true, log_y: true })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DuhamelReport {
    pub config: Value,
    pub dts: Vec<f64>,
    /// `‖U_Duhamel(T) - (u_ε - ũ_ε)(T)‖ / ‖(u_ε - ũ_ε)(T)‖` per step size.
    pub discrepancies: Vec<f64>,
    /// Observed orders between successive halvings.
    pub orders: Vec<f64>,
    pub fit: Option<RateFit>,
}

impl DuhamelReport {
    /// Relative discrepancy at the first (default) step size.
    pub fn default_discrepancy(&self) -> f64 {
        self.discrepancies[0]
    }

    /// Least-squares order in `dt`.
    pub fn order(&self) -> Option<f64> {
        self.fit.map(|f| -f.exponent)
    }
}

fn duhamel_discrepancy(problem: &Problem, other: MollifierKind, cfg: &StepperConfig) -> Result<f64> {
    let a = problem.clone();
    let b = a.clone().with_mollifier(other);
    let op_a = a.operator()?;
    let op_b = b.operator()?;
    let (ua0, ub0) = (a.initial_data()?, b.initial_data()?);
    let full = cfg.with_stride(1);
    let ua = solve_homogeneous(&op_a, &ua0, &full)?;
    let ub = solve_homogeneous(&op_b, &ub0, &cfg.with_stride(0))?;
    let direct = ua.final_field() - ub.final_field();
    // U = u - ũ solves i U_t + L̃ U = -(L - L̃) u
    let source = TraceSource::from_trace(&ua, |u| &op_b.apply(u) - &op_a.apply(u))?;
    let composed = duhamel_compose(&op_b, &(&ua0 - &ub0), &source, &cfg.with_stride(0))?;
    let scale = direct.l2_norm();
    let gap = (composed.final_field() - &direct).l2_norm();
    Ok(if scale == 0.0 { gap } else { gap / scale })
}

/// Duhamel representation of `u_ε - ũ_ε` against the direct difference,
/// at the resolved step and `halvings` successive halvings of it.
pub fn run_duhamel_check(problem: &Problem, other: MollifierKind, halvings: usize) -> Result<DuhamelReport> {
    let eps = problem
        .epsilon
        .ok_or_else(|| Error::Precondition("the Duhamel check needs a regularization scale".into()))?;
    let ops = [problem.operator()?, problem.clone().with_mollifier(other).operator()?];
    let base = common_step(&problem.time, &[&ops[0], &ops[1]])?;
    let dts: Vec<f64> = (0..=halvings).map(|k| base.dt / 2f64.powi(k as i32)).collect();
    let discrepancies: Vec<f64> = dts
        .par_iter()
        .map(|&dt| duhamel_discrepancy(problem, other, &StepperConfig { dt, ..base }))
        .collect::<Result<_>>()?;
    let orders = discrepancies.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let fit = fit_rate(&dts.iter().copied().zip(discrepancies.iter().copied()).collect::<Vec<_>>()).ok();
    let mut config = problem.describe();
    config["second_mollifier"] = json!(other.name());
    config["epsilon"] = json!(eps);
    config["stepper"]["dt_resolved"] = json!(base.dt);
    Ok(DuhamelReport { config, dts, discrepancies, orders, fit })
}

impl Report for DuhamelReport {
    fn name(&self) -> String {
        "duhamel".into()
    }

    fn columns(&self) -> Vec<&'static str> {
        vec!["dt", "relative_discrepancy"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.dts.iter().zip(&self.discrepancies).map(|(d, v)| vec![num(*d), num(*v)]).collect()
    }

    fn metadata(&self) -> Value {
        json!({
            "campaign": "duhamel",
            "config": self.config,
            "orders": self.orders,
            "order": self.order(),
            "fit": self.fit,
            "default_discrepancy": self.default_discrepancy(),
        })
    }

    fn plot(&self) -> Option<PlotSpec> {
        Some(PlotSpec { title: "duhamel discrepancy".into(), x: 0, ys: vec![1], log_x: true, log_y: true })
    }
}
