//! Campaign execution and the per-campaign summary.

use std::fs;
use std::path::PathBuf;

use pdem_core::experiments::{
    check_operator, run_consistency, run_duhamel_check, run_energy, run_moderateness, run_moderateness_with_solution,
    run_uniqueness, write_report, OperatorCheck, Report,
};
use pdem_core::Mollifier;
use serde_json::json;

use crate::config::{Campaign, ExperimentConfig};

/// Relative `L²` drift allowed by the energy campaign.
pub const DRIFT_BOUND: f64 = 1e-10;
/// Bound on the relative operator-check defects.
pub const HERMITIAN_BOUND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    /// A hard invariant failed.
    Violated(String),
    /// The campaign aborted; later campaigns still run.
    Aborted(String),
    Skipped(String),
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub campaign: String,
    pub summary: String,
    pub status: Status,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let tag = match &self.status {
            Status::Ok => "ok".to_string(),
            Status::Violated(why) => format!("INVARIANT FAILED ({why})"),
            Status::Aborted(why) => format!("aborted: {why}"),
            Status::Skipped(why) => format!("skipped: {why}"),
        };
        if self.summary.is_empty() {
            format!("{}: {tag}", self.campaign)
        } else {
            format!("{}: {} [{tag}]", self.campaign, self.summary)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outcomes: Vec<Outcome>,
}

impl RunSummary {
    pub fn invariants_hold(&self) -> bool {
        !self.outcomes.iter().any(|o| matches!(o.status, Status::Violated(_)))
    }

    /// 0 when every hard invariant holds, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        u8::from(!self.invariants_hold())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into())
}

type Executed = pdem_core::Result<(String, Status, Box<dyn Report>)>;

fn operator_check(config: &ExperimentConfig) -> pdem_core::Result<(OperatorCheck, Outcome)> {
    let op = config.problem().operator()?;
    let c = check_operator(&op, config.options.samples, config.options.seed)?;
    let worst = c.asymmetry.max(c.positive_part).max(c.imaginary_part).max(c.summation_by_parts);
    let status = if worst <= HERMITIAN_BOUND && c.constant_residual <= HERMITIAN_BOUND {
        Status::Ok
    } else {
        Status::Violated(format!("operator defect {worst:.1e} > {HERMITIAN_BOUND:e}"))
    };
    let summary = format!(
        "asymmetry {:.1e}, positive part {:.1e}, summation by parts {:.1e}, |L1| {:.1e} over {} fields (seed {})",
        c.asymmetry, c.positive_part, c.summation_by_parts, c.constant_residual, c.samples, config.options.seed
    );
    Ok((c, Outcome { campaign: "operator".into(), summary, status, files: Vec::new() }))
}

fn execute(config: &ExperimentConfig, campaign: Campaign) -> Executed {
    let problem = config.problem();
    let ladder = config.ladder();
    match campaign {
        Campaign::Energy => {
            let r = run_energy(&problem)?;
            let status = if r.max_drift <= DRIFT_BOUND {
                Status::Ok
            } else {
                Status::Violated(format!("drift {:.2e} > {DRIFT_BOUND:e}", r.max_drift))
            };
            let s = format!(
                "max drift {:.2e} over {} steps (dt {:.3e}), gradient form drift {:.2e}",
                r.max_drift, r.steps, r.dt, r.max_energy_drift
            );
            Ok((s, status, Box::new(r)))
        }
        Campaign::Moderateness => {
            let r = if config.options.solution {
                let base = pdem_core::Problem { epsilon: None, ..problem };
                run_moderateness_with_solution(&base, &ladder)?
            } else {
                run_moderateness(&config.coefficient, &Mollifier::new(config.mollifier), &ladder, &config.grid)?
            };
            let mut s = format!("W1inf exponent {}", opt(r.coefficient.rate()));
            if let Some(sol) = &r.solution {
                s.push_str(&format!(", H2 exponent {}", opt(sol.rate())));
            }
            Ok((s, Status::Ok, Box::new(r)))
        }
        Campaign::Uniqueness => {
            let r = run_uniqueness(&problem, config.second_mollifier, &ladder)?;
            let s = match &r.decay {
                Some(d) => format!(
                    "decay order {} on {} of {} rungs, coefficient order {}, scheme error {:.2e}",
                    opt(d.rate()),
                    d.unfloored(),
                    d.pairs.len(),
                    opt(r.coefficient_decay.as_ref().and_then(|c| c.rate())),
                    r.scheme_error
                ),
                None => "identical families, all differences zero".into(),
            };
            Ok((s, Status::Ok, Box::new(r)))
        }
        Campaign::Consistency => {
            let r = run_consistency(&problem, &ladder, config.options.refinement)?;
            let s = format!(
                "solution order {} on {} of {} rungs, hypothesis order {}, scheme error {:.2e}, non-increasing {}",
                opt(r.solution.rate()),
                r.solution.unfloored(),
                r.eps.len(),
                opt(r.hypothesis_fit.rate()),
                r.scheme_error,
                r.non_increasing
            );
            Ok((s, Status::Ok, Box::new(r)))
        }
        Campaign::Duhamel => {
            let r = run_duhamel_check(&problem, config.second_mollifier, config.options.halvings)?;
            let s = format!("dt order {}, discrepancy {:.2e} at the resolved dt", opt(r.order()), r.default_discrepancy());
            Ok((s, Status::Ok, Box::new(r)))
        }
        Campaign::All => unreachable!("expanded before execution"),
    }
}

/// Runs every selected campaign, writing reports under `config.output`.
pub fn run(config: &ExperimentConfig) -> std::io::Result<RunSummary> {
    fs::create_dir_all(&config.output)?;
    let echo = config.output.join("config.toml");
    fs::write(&echo, config.to_toml())?;
    log::info!("resolved configuration:\n{}", config.to_toml());

    let mut outcomes = Vec::new();
    match operator_check(config) {
        Ok((check, mut outcome)) => {
            let path = config.output.join("operator_check.json");
            let meta = json!({ "config": config.problem().describe(), "seed": config.options.seed, "check": check });
            fs::write(&path, serde_json::to_string_pretty(&meta).expect("serializes") + "\n")?;
            outcome.files.push(path);
            outcomes.push(outcome);
        }
        Err(e) => outcomes.push(Outcome {
            campaign: "operator".into(),
            summary: String::new(),
            status: Status::Aborted(e.to_string()),
            files: Vec::new(),
        }),
    }

    for campaign in config.campaign.expand() {
        let name = campaign.name().to_string();
        if let Err(why) = config.check_campaign(campaign) {
            outcomes.push(Outcome { campaign: name, summary: String::new(), status: Status::Skipped(why), files: Vec::new() });
            continue;
        }
        log::info!("running {name}");
        let outcome = match execute(config, campaign) {
            Ok((summary, status, report)) => match write_report(report.as_ref(), &config.output) {
                Ok(files) => Outcome { campaign: name, summary, status, files },
                Err(e) => Outcome { campaign: name, summary, status: Status::Aborted(e.to_string()), files: Vec::new() },
            },
            Err(e) => Outcome { campaign: name, summary: String::new(), status: Status::Aborted(e.to_string()), files: Vec::new() },
        };
        outcomes.push(outcome);
    }
    Ok(RunSummary { outcomes })
}
