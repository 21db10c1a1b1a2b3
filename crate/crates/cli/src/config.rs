//! Experiment descriptions in TOML.
//!
//! ```toml
//! campaign = "energy"
//! output = "results"
//! epsilon = 0.05
//!
//! [grid]
//! d = 1
//! L = 4.0
//! n = 512
//!
//! [coefficient]
//! spec = "background=1; delta(center=0, weight=1)"
//! ```
//!
//! Omitted keys take the defaults materialized by [`parse_config_str`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pdem_core::evolution::FaceMean;
use pdem_core::{CoefficientSpec, DataSpec, EpsilonLadder, Grid, MollifierKind, Problem, TimeSettings, TimeStep};
use serde::{Deserialize, Serialize};

pub const DEFAULT_OUTPUT: &str = "results";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    /// A key whose value does not validate; `line` is 1-based when the key
    /// appears in the source.
    #[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { key: String, line: Option<usize>, message: String },
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Campaign {
    Energy,
    Moderateness,
    Uniqueness,
    Consistency,
    Duhamel,
    All,
}

impl Campaign {
    pub const SINGLE: [Campaign; 5] =
        [Campaign::Energy, Campaign::Moderateness, Campaign::Uniqueness, Campaign::Consistency, Campaign::Duhamel];

    pub fn name(self) -> &'static str {
        match self {
            Campaign::Energy => "energy",
            Campaign::Moderateness => "moderateness",
            Campaign::Uniqueness => "uniqueness",
            Campaign::Consistency => "consistency",
            Campaign::Duhamel => "duhamel",
            Campaign::All => "all",
        }
    }

    pub fn expand(self) -> Vec<Campaign> {
        match self {
            Campaign::All => Self::SINGLE.to_vec(),
            c => vec![c],
        }
    }
}

impl fmt::Display for Campaign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Campaign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let all = [Self::SINGLE.as_slice(), &[Campaign::All]].concat();
        all.iter().copied().find(|c| c.name() == s.trim()).ok_or_else(|| {
            let names: Vec<&str> = all.iter().map(|c| c.name()).collect();
            format!("unknown campaign `{s}`, expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderSettings {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl LadderSettings {
    pub fn build(&self) -> pdem_core::Result<EpsilonLadder> {
        EpsilonLadder::geometric(self.eps0, self.ratio, self.count)
    }
}

impl Default for LadderSettings {
    fn default() -> Self {
        Self { eps0: 0.5, ratio: 0.5, count: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    /// Fine-grid factor of the consistency reference.
    pub refinement: usize,
    /// Step halvings of the Duhamel check.
    pub halvings: usize,
    /// Also fit the `H²` growth of the solution in the moderateness campaign.
    pub solution: bool,
    pub mean: FaceMean,
    /// Random fields per operator check.
    pub samples: usize,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Self { refinement: 2, halvings: 3, solution: false, mean: FaceMean::Arithmetic, samples: 20, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: Grid,
    pub coefficient: CoefficientSpec,
    pub data: DataSpec,
    pub mollifier: MollifierKind,
    pub second_mollifier: MollifierKind,
    pub ladder: LadderSettings,
    pub time: TimeSettings,
    pub campaign: Campaign,
    pub output: PathBuf,
    /// Scale of the single-scale campaigns (energy, duhamel).
    pub epsilon: f64,
    pub options: Options,
}

impl ExperimentConfig {
    pub fn ladder(&self) -> EpsilonLadder {
        self.ladder.build().expect("validated when parsed")
    }

    /// The problem at scale `epsilon`.
    pub fn problem(&self) -> Problem {
        let mut p = Problem::new(self.grid, self.coefficient.clone(), self.data.clone(), self.time)
            .with_mollifier(self.mollifier)
            .with_epsilon(self.epsilon);
        p.mean = self.options.mean;
        p
    }

    /// Campaign preconditions that can be decided before any solve.
    pub fn check_campaign(&self, campaign: Campaign) -> Result<(), String> {
        if campaign == Campaign::Consistency && !self.coefficient.is_regular() {
            return Err("consistency needs a W^{1,inf} coefficient (no delta or jump atoms) so that a classical solution exists"
                .into());
        }
        if campaign == Campaign::Uniqueness || campaign == Campaign::Duhamel {
            if self.second_mollifier == self.mollifier {
                log::warn!("{campaign}: both mollifiers are {}; differences vanish identically", self.mollifier);
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        let raw = RawConfig {
            campaign: Some(self.campaign.name().into()),
            output: Some(self.output.display().to_string()),
            epsilon: Some(self.epsilon),
            grid: Some(RawGrid { d: Some(self.grid.dim()), l: Some(self.grid.half_width()), n: Some(self.grid.n()) }),
            coefficient: Some(RawSpec { spec: Some(self.coefficient.to_string()) }),
            data: Some(RawSpec { spec: Some(self.data.to_string()) }),
            mollifier: Some(RawMollifier {
                variant: Some(self.mollifier.name().into()),
                second: Some(self.second_mollifier.name().into()),
            }),
            ladder: Some(RawLadder { eps0: Some(self.ladder.eps0), ratio: Some(self.ladder.ratio), count: Some(self.ladder.count) }),
            stepper: Some(RawStepper {
                dt: Some(match self.time.dt {
                    TimeStep::Auto => RawDt::Text("auto".into()),
                    TimeStep::Fixed(dt) => RawDt::Number(dt),
                }),
                t: Some(self.time.final_time),
                tolerance: Some(self.time.tolerance),
                stride: Some(self.time.stride),
            }),
            options: Some(RawOptions {
                refinement: Some(self.options.refinement),
                halvings: Some(self.options.halvings),
                solution: Some(self.options.solution),
                mean: Some(self.options.mean.to_string()),
                samples: Some(self.options.samples),
                seed: Some(self.options.seed),
            }),
        };
        toml::to_string(&raw).expect("config serializes")
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    campaign: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    grid: Option<RawGrid>,
    coefficient: Option<RawSpec>,
    data: Option<RawSpec>,
    mollifier: Option<RawMollifier>,
    ladder: Option<RawLadder>,
    stepper: Option<RawStepper>,
    options: Option<RawOptions>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    d: Option<usize>,
    #[serde(rename = "L", alias = "half_width")]
    l: Option<f64>,
    n: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    spec: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMollifier {
    variant: Option<String>,
    second: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLadder {
    eps0: Option<f64>,
    ratio: Option<f64>,
    count: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawDt {
    Number(f64),
    Text(String),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepper {
    dt: Option<RawDt>,
    #[serde(rename = "T", alias = "final_time")]
    t: Option<f64>,
    tolerance: Option<f64>,
    stride: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    refinement: Option<usize>,
    halvings: Option<usize>,
    solution: Option<bool>,
    mean: Option<String>,
    samples: Option<usize>,
    seed: Option<u64>,
}

/// 1-based line of `key` inside `[section]` (top level when `section` is
/// empty).
fn locate(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (k, line) in source.lines().enumerate() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            if key.is_empty() && current == section {
                return Some(k + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some((name, _)) = t.split_once('=') {
                if name.trim() == key {
                    return Some(k + 1);
                }
            }
        }
    }
    None
}

struct Validator<'a> {
    source: &'a str,
}

impl Validator<'_> {
    fn invalid(&self, section: &str, key: &str, message: impl fmt::Display) -> ConfigError {
        let line = locate(self.source, section, key).or_else(|| locate(self.source, section, ""));
        let key = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        ConfigError::Invalid { key, line, message: message.to_string() }
    }

    fn missing(&self, section: &str, key: &str) -> ConfigError {
        self.invalid(section, key, "required key is missing")
    }
}

pub fn parse_config_str(source: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(source).map_err(|e| ConfigError::Syntax(e.to_string().trim_end().to_string()))?;
    let v = Validator { source };

    let rg = raw.grid.ok_or_else(|| v.missing("grid", ""))?;
    let d = rg.d.unwrap_or(1);
    let n = rg.n.ok_or_else(|| v.missing("grid", "n"))?;
    let l = rg.l.ok_or_else(|| v.missing("grid", "L"))?;
    let grid = Grid::new(d, l, n).map_err(|e| v.invalid("grid", if d == 1 || d == 2 { "n" } else { "d" }, e))?;

    let coef_text = raw.coefficient.and_then(|c| c.spec).ok_or_else(|| v.missing("coefficient", "spec"))?;
    let coefficient: CoefficientSpec = coef_text.parse().map_err(|e| v.invalid("coefficient", "spec", e))?;
    let data = match raw.data.and_then(|d| d.spec) {
        Some(text) => text.parse().map_err(|e| v.invalid("data", "spec", e))?,
        None => DataSpec::default(),
    };

    let rm = raw.mollifier.unwrap_or_default();
    let mollifier: MollifierKind = match rm.variant {
        Some(s) => s.parse().map_err(|e| v.invalid("mollifier", "variant", e))?,
        None => MollifierKind::Standard,
    };
    let second_mollifier = match rm.second {
        Some(s) => s.parse().map_err(|e| v.invalid("mollifier", "second", e))?,
        None => *MollifierKind::ALL.iter().find(|m| **m != mollifier).expect("two variants"),
    };

    let rl = raw.ladder.unwrap_or_default();
    let defaults = LadderSettings::default();
    let ladder = LadderSettings {
        eps0: rl.eps0.unwrap_or(defaults.eps0),
        ratio: rl.ratio.unwrap_or(defaults.ratio),
        count: rl.count.unwrap_or(defaults.count),
    };
    let ladder_key = if ladder.count < EpsilonLadder::MIN_LEN {
        "count"
    } else if !(ladder.ratio > 0.0 && ladder.ratio < 1.0) {
        "ratio"
    } else {
        "eps0"
    };
    let built = ladder.build().map_err(|e| v.invalid("ladder", ladder_key, e))?;

    let rs = raw.stepper.unwrap_or_default();
    let dt = match rs.dt {
        None => TimeStep::Auto,
        Some(RawDt::Number(x)) => TimeStep::Fixed(x),
        Some(RawDt::Text(s)) => s.parse().map_err(|e| v.invalid("stepper", "dt", e))?,
    };
    let mut time = TimeSettings::new(dt, rs.t.unwrap_or(1.0));
    if let Some(tol) = rs.tolerance {
        time.tolerance = tol;
    }
    time.stride = rs.stride.unwrap_or(0);
    let probe = match dt {
        TimeStep::Fixed(x) => pdem_core::StepperConfig::new(x, time.final_time),
        TimeStep::Auto => pdem_core::StepperConfig::new(time.final_time, time.final_time),
    };
    probe.and_then(|c| c.with_tolerance(time.tolerance)).map_err(|e| {
        let key = if e.to_string().contains("tolerance") {
            "tolerance"
        } else if e.to_string().contains("final time") {
            "T"
        } else {
            "dt"
        };
        v.invalid("stepper", key, e)
    })?;

    let ro = raw.options.unwrap_or_default();
    let od = Options::default();
    let options = Options {
        refinement: ro.refinement.unwrap_or(od.refinement),
        halvings: ro.halvings.unwrap_or(od.halvings),
        solution: ro.solution.unwrap_or(od.solution),
        mean: match ro.mean {
            Some(s) => s.parse().map_err(|e| v.invalid("options", "mean", e))?,
            None => od.mean,
        },
        samples: ro.samples.unwrap_or(od.samples),
        seed: ro.seed.unwrap_or(od.seed),
    };
    if !matches!(options.refinement, 2 | 4) {
        return Err(v.invalid("options", "refinement", format!("must be 2 or 4, got {}", options.refinement)));
    }
    if options.halvings == 0 {
        return Err(v.invalid("options", "halvings", "at least one halving is needed for an order"));
    }
    if options.samples == 0 {
        return Err(v.invalid("options", "samples", "at least one random field is needed"));
    }

    let campaign: Campaign = match raw.campaign {
        Some(s) => s.parse().map_err(|e: String| v.invalid("", "campaign", e))?,
        None => return Err(v.missing("", "campaign")),
    };
    let epsilon = raw.epsilon.unwrap_or_else(|| built.smallest());
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(v.invalid("", "epsilon", format!("must lie in (0, 1], got {epsilon}")));
    }
    let output = PathBuf::from(raw.output.unwrap_or_else(|| DEFAULT_OUTPUT.into()));

    let config = ExperimentConfig {
        grid,
        coefficient,
        data,
        mollifier,
        second_mollifier,
        ladder,
        time,
        campaign,
        output,
        epsilon,
        options,
    };
    if campaign != Campaign::All {
        config.check_campaign(campaign).map_err(|e| v.invalid("", "campaign", e))?;
    }
    Ok(config)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let source = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    parse_config_str(&source)
}
