//! Scenario-driven batch runner over `sdl-core`.

pub mod artifacts;
pub mod scenario;
pub mod stages;

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;

use artifacts::{ArtifactRecord, Artifacts};
use scenario::{Scenario, Stage};
use stages::{Check, Context, StageOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub status: Status,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub config_hash: String,
    pub kappa: Option<f64>,
    pub stages: Vec<StageSummary>,
    pub artifacts: Vec<ArtifactRecord>,
    /// Every stage ran without error and every check passed.
    pub all_pass: bool,
    /// Some stage raised an error.
    pub hard_error: bool,
}

/// Command-line overrides applied before hashing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Run only these stages (in pipeline order).
    pub only: Option<Vec<Stage>>,
}

pub fn apply_overrides(mut s: Scenario, o: &Overrides) -> Scenario {
    if let Some(out) = &o.out {
        s.output = out.clone();
    }
    if let Some(seed) = o.seed {
        s.mc.seed = seed;
        s.battery_seed = seed;
    }
    if let Some(only) = &o.only {
        s.stages = only.clone();
    }
    s
}

/// Runs the requested stages in pipeline order and writes `summary.json`.
///
/// `base` resolves relative measure-file paths.
pub fn run(scenario: Scenario, base: &Path) -> Result<Summary> {
    let hash = scenario.hash();
    let art = Artifacts::new(&scenario.output, &hash)?;
    art.raw("scenario.json", &(scenario.to_json() + "\n"))?;
    let name = scenario.name.clone();
    let requested: Vec<Stage> = Stage::ORDER.iter().copied().filter(|s| scenario.stages.contains(s)).collect();

    let mut stages = Vec::new();
    let cx = Context::build(scenario, base);
    let kappa = cx.as_ref().ok().map(|c| c.kappa);
    match cx {
        Err(e) => {
            for st in requested {
                stages.push(StageSummary {
                    stage: st,
                    status: Status::Error,
                    checks: vec![],
                    artifacts: vec![],
                    warnings: vec![],
                    error: Some(format!("{e:#}")),
                });
            }
        }
        Ok(cx) => {
            for st in requested {
                let res = match st {
                    Stage::Classify => stages::classify_stage(&cx, &art),
                    Stage::Resolvent => stages::resolvent_stage(&cx, &art),
                    Stage::Semigroup => stages::semigroup_stage(&cx, &art),
                    Stage::Converge => stages::converge_stage(&cx, &art),
                    Stage::Mc => stages::mc_stage(&cx, &art),
                };
                stages.push(summarize(st, res));
            }
        }
    }
    let hard_error = stages.iter().any(|s| s.status == Status::Error);
    let all_pass = stages.iter().all(|s| matches!(s.status, Status::Pass | Status::Skipped));
    let mut summary = Summary { scenario: name, config_hash: hash, kappa, stages, artifacts: vec![], all_pass, hard_error };
    summary.artifacts = art.records();
    art.json("summary.json", &summary)?;
    Ok(summary)
}

fn summarize(stage: Stage, res: Result<StageOutput>) -> StageSummary {
    match res {
        Ok(o) => StageSummary {
            stage,
            status: match &o.skipped {
                Some(_) => Status::Skipped,
                None if o.checks.iter().all(|c| c.pass) => Status::Pass,
                None => Status::Fail,
            },
            checks: o.checks,
            artifacts: o.artifacts,
            warnings: o.skipped.into_iter().chain(o.warnings).collect(),
            error: None,
        },
        Err(e) => StageSummary {
            stage,
            status: Status::Error,
            checks: vec![],
            artifacts: vec![],
            warnings: vec![],
            error: Some(format!("{e:#}")),
        },
    }
}

/// Loads the scenario at `path`, applies `o`, and runs it.
pub fn run_scenario(path: &Path, o: &Overrides) -> Result<Summary> {
    let s = apply_overrides(Scenario::load(path)?, o);
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    run(s, base)
}
