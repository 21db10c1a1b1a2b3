//! A complete, re-runnable description of one regularized Cauchy problem.

use std::fmt;
use std::str::FromStr;

use serde_json::json;

use crate::coefficients::{regularize, regularize_data, CoefficientSpec, DataSpec, Mollifier, MollifierKind, RegularizedCoefficient};
use crate::error::{Error, Result};
use crate::evolution::{solve_homogeneous, FaceMean, SolutionTrace, SpatialOperator, StepperConfig, DEFAULT_TOLERANCE};
use crate::grid::{ComplexField, Grid};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum TimeStep {
    /// The operator's default step.
    #[default]
    Auto,
    Fixed(f64),
}

impl fmt::Display for TimeStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeStep::Auto => f.write_str("auto"),
            TimeStep::Fixed(dt) => write!(f, "{dt}"),
        }
    }
}

impl FromStr for TimeStep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(TimeStep::Auto);
        }
        let dt: f64 = s.parse().map_err(|_| Error::Parse(format!("dt must be `auto` or a number, got `{s}`")))?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStepper(format!("dt must be positive, got {dt}")));
        }
        Ok(TimeStep::Fixed(dt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSettings {
    pub dt: TimeStep,
    pub final_time: f64,
    pub tolerance: f64,
    pub stride: usize,
}

impl TimeSettings {
    pub fn new(dt: TimeStep, final_time: f64) -> Self {
        Self { dt, final_time, tolerance: DEFAULT_TOLERANCE, stride: 0 }
    }

    pub fn resolve(&self, op: &SpatialOperator) -> Result<StepperConfig> {
        let cfg = match self.dt {
            TimeStep::Auto => StepperConfig::auto(op, self.final_time)?,
            TimeStep::Fixed(dt) => StepperConfig::new(dt, self.final_time)?,
        };
        Ok(cfg.with_tolerance(self.tolerance)?.with_stride(self.stride))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: Grid,
    pub coefficient: CoefficientSpec,
    pub data: DataSpec,
    pub mollifier: MollifierKind,
    /// Regularization scale; `None` samples `g` and `u₀` pointwise.
    pub epsilon: Option<f64>,
    pub time: TimeSettings,
    pub mean: FaceMean,
}

impl Problem {
    pub fn new(grid: Grid, coefficient: CoefficientSpec, data: DataSpec, time: TimeSettings) -> Self {
        Self { grid, coefficient, data, mollifier: MollifierKind::Standard, epsilon: None, time, mean: FaceMean::default() }
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = Some(eps);
        self
    }

    pub fn with_mollifier(mut self, kind: MollifierKind) -> Self {
        self.mollifier = kind;
        self
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_time(mut self, time: TimeSettings) -> Self {
        self.time = time;
        self
    }

    pub fn coefficient_field(&self) -> Result<RegularizedCoefficient> {
        match self.epsilon {
            Some(eps) => regularize(&self.coefficient, &Mollifier::new(self.mollifier), eps, &self.grid),
            None => RegularizedCoefficient::sampled(&self.coefficient, &self.grid),
        }
    }

    pub fn initial_data(&self) -> Result<ComplexField> {
        match self.epsilon {
            Some(eps) => regularize_data(&self.data, &Mollifier::new(self.mollifier), eps, &self.grid),
            None => self
                .data
                .sample(&self.grid)
                .ok_or_else(|| Error::InvalidData("delta data has no pointwise samples; set a regularization scale".into())),
        }
    }

    pub fn operator(&self) -> Result<SpatialOperator> {
        Ok(SpatialOperator::assemble(&self.coefficient_field()?, self.mean))
    }

    pub fn solve(&self) -> Result<Solved> {
        let op = self.operator()?;
        let stepper = self.time.resolve(&op)?;
        let u0 = self.initial_data()?;
        let trace = solve_homogeneous(&op, &u0, &stepper)?;
        Ok(Solved { op, stepper, u0, trace })
    }

    /// Everything needed to rebuild the problem, as JSON.
    pub fn describe(&self) -> serde_json::Value {
        json!({
            "grid": { "d": self.grid.dim(), "L": self.grid.half_width(), "n": self.grid.n() },
            "coefficient": self.coefficient.to_string(),
            "data": self.data.to_string(),
            "mollifier": self.mollifier.name(),
            "epsilon": self.epsilon,
            "stepper": {
                "dt": self.time.dt.to_string(),
                "T": self.time.final_time,
                "tolerance": self.time.tolerance,
                "stride": self.time.stride,
            },
            "face_mean": self.mean.to_string(),
        })
    }
}

/// Output of [`Problem::solve`].
#[derive(Debug, Clone)]
pub struct Solved {
    pub op: SpatialOperator,
    pub stepper: StepperConfig,
    pub u0: ComplexField,
    pub trace: SolutionTrace,
}
