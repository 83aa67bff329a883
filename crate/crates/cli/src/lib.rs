//! Front end for `ltlnav`: each subcommand is a function writing its report
//! to a caller-supplied stream and returning the process exit code.

pub mod output;
pub mod plot;
pub mod scenario;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use ltlnav_core::buchi::translate as to_buchi;
use ltlnav_core::ltl::{normalize, parse_formula, Formula};
use ltlnav_core::planner::{plan_agent, Plan};
use ltlnav_core::simulator::{self, SimError};

use crate::output::ArtifactWriter;
use crate::plot::PlotSpec;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_STRICT: u8 = 2;
pub const EXIT_UNSAT: u8 = 3;
/// The simulation stopped early: safety violation, degenerate field or
/// exhausted step budget. Artifacts are still written.
pub const EXIT_INCOMPLETE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Input(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> u8 {
        EXIT_INPUT
    }
}

fn out_err(e: io::Error) -> CliError {
    CliError::Output(e.to_string())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Geometry report. Failed conditions are warnings unless `strict`.
pub fn check(config: &str, strict: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    let loaded = scenario::load(config)?;
    let report = loaded.scenario.validate(false).map_err(|e| CliError::Input(e.to_string()))?;
    write!(out, "{report}").map_err(out_err)?;
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        writeln!(out, "all {} conditions hold", report.checks.len()).map_err(out_err)?;
        return Ok(EXIT_OK);
    }
    if strict {
        writeln!(out, "strict validation failed: {}", failed.join(", ")).map_err(out_err)?;
        return Ok(EXIT_STRICT);
    }
    writeln!(out, "{} warning(s): {}", failed.len(), failed.join(", ")).map_err(out_err)?;
    Ok(EXIT_OK)
}

/// Prints the automaton for `formula` as JSON, or as DOT when `dot` is set.
/// With `out_dir`, both renderings are also written there.
pub fn translate(
    formula: &str,
    props: Option<&[String]>,
    dot: bool,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<u8, CliError> {
    let f: Formula = match props {
        Some(p) => parse_formula(formula, &p.iter().cloned().collect()),
        None => formula.parse(),
    }
    .map_err(|e| CliError::Input(format!("{formula:?}: {e}")))?;
    let b = to_buchi(&normalize(&f));
    let json = serde_json::to_string_pretty(&b.to_json()).expect("automaton serializes") + "\n";
    let dot_text = b.to_dot();
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        write_file(&dir.join("automaton.json"), &json)?;
        write_file(&dir.join("automaton.dot"), &dot_text)?;
    }
    out.write_all(if dot { dot_text.as_bytes() } else { json.as_bytes() }).map_err(out_err)?;
    Ok(EXIT_OK)
}

/// One entry of `plans.json`; `plan` is `null` for an unsatisfiable task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPlan {
    pub agent: u32,
    pub plan: Option<Plan>,
}

pub fn compute_plans(s: &ltlnav_core::workspace::Scenario) -> Result<Vec<AgentPlan>, CliError> {
    s.agents
        .iter()
        .map(|a| {
            let plan = plan_agent(&s.regions, a).map_err(|e| CliError::Input(e.to_string()))?;
            Ok(AgentPlan { agent: a.id, plan })
        })
        .collect()
}

fn plans_json(plans: &[AgentPlan]) -> String {
    serde_json::to_string_pretty(plans).expect("plans serialize") + "\n"
}

/// Plans every agent; exit 3 when any task is unsatisfiable.
pub fn plan(config: &str, out_dir: Option<&Path>, out: &mut dyn Write) -> Result<u8, CliError> {
    let loaded = scenario::load(config)?;
    let plans = compute_plans(&loaded.scenario)?;
    for p in &plans {
        match &p.plan {
            Some(plan) => writeln!(out, "agent {}: {plan}", p.agent),
            None => writeln!(out, "agent {}: UNSAT", p.agent),
        }
        .map_err(out_err)?;
    }
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        write_file(&dir.join("plans.json"), &plans_json(&plans))?;
    }
    Ok(if plans.iter().all(|p| p.plan.is_some()) { EXIT_OK } else { EXIT_UNSAT })
}

pub fn read_plans(path: &Path) -> Result<Vec<AgentPlan>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Overrides applied on top of the scenario's `sim` block.
#[derive(Debug, Clone, Default)]
pub struct SimOverrides {
    pub clamp: Option<f64>,
    pub dt: Option<f64>,
    pub cycles: Option<usize>,
    pub stride: Option<usize>,
    /// Execute these plans instead of planning.
    pub plans: Option<PathBuf>,
}

/// Plans (or loads plans), runs the simulation and writes `trajectory.csv`,
/// `events.jsonl`, `verdict.json` and `plans.json` into `out_dir`.
pub fn simulate(config: &str, out_dir: &Path, o: &SimOverrides, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut s = scenario::load(config)?.scenario;
    if let Some(c) = o.clamp {
        if !(c > 0.0) {
            return Err(CliError::Input(format!("--clamp must be positive, got {c}")));
        }
        s.sim.clamp = Some(c);
    }
    if let Some(dt) = o.dt {
        if !(dt > 0.0) {
            return Err(CliError::Input(format!("--dt must be positive, got {dt}")));
        }
        s.sim.dt = dt;
    }
    if let Some(c) = o.cycles {
        if c == 0 {
            return Err(CliError::Input("--cycles must be at least 1".into()));
        }
        s.sim.max_cycles = c;
    }
    if let Some(n) = o.stride {
        if n == 0 {
            return Err(CliError::Input("--stride must be at least 1".into()));
        }
        s.sim.record_stride = n;
    }

    let plans = match &o.plans {
        Some(path) => read_plans(path)?,
        None => compute_plans(&s)?,
    };
    let mut by_agent = Vec::with_capacity(s.agents.len());
    for a in &s.agents {
        match plans.iter().find(|p| p.agent == a.id).map(|p| &p.plan) {
            Some(Some(plan)) => by_agent.push(plan.clone()),
            Some(None) => {
                writeln!(out, "agent {}: UNSAT", a.id).map_err(out_err)?;
                return Ok(EXIT_UNSAT);
            }
            None => return Err(CliError::Input(format!("no plan given for agent {}", a.id))),
        }
    }

    create_dir(out_dir)?;
    let open = |name: &str| {
        let path = out_dir.join(name);
        File::create(&path).map(BufWriter::new).map_err(|e| CliError::io(&path, e))
    };
    let mut writer = ArtifactWriter::new(s.workspace.dim, open("trajectory.csv")?, open("events.jsonl")?)?;
    let result = simulator::run(&s, by_agent, &mut writer);
    writer.finish()?;
    let (outcome, code) = match result {
        Ok(outcome) => (outcome, EXIT_OK),
        Err(f) => match f.error {
            SimError::PlanStart { .. } | SimError::UnknownRegion { .. } | SimError::PlanCount { .. } => {
                return Err(CliError::Input(f.error.to_string()))
            }
            _ => (*f.outcome, EXIT_INCOMPLETE),
        },
    };
    let v = &outcome.verdict;
    write_file(&out_dir.join("verdict.json"), &(serde_json::to_string_pretty(v).expect("verdict serializes") + "\n"))?;
    write_file(&out_dir.join("plans.json"), &plans_json(&plans))?;

    let fmt_opt = |x: Option<f64>| x.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    writeln!(out, "completed: {}  steps: {}  t: {:.2}", v.completed, v.steps, v.t_end).map_err(out_err)?;
    if let Some(e) = &v.error {
        writeln!(out, "stopped: {e}").map_err(out_err)?;
    }
    writeln!(
        out,
        "min agent clearance: {}  min region clearance: {}  max |u|: {:.4}",
        fmt_opt(v.min_agent_clearance),
        fmt_opt(v.min_region_clearance),
        v.max_abs_u
    )
    .map_err(out_err)?;
    for a in &v.agents {
        let realized: Vec<String> = a.realized.iter().map(u32::to_string).collect();
        writeln!(out, "agent {}: conformant {}  realized {}", a.id, a.conformant, realized.join(" ")).map_err(out_err)?;
    }
    Ok(code)
}

/// Renders a trajectory to SVG. Regions and agent sizes come from `config`
/// and arrows from `plans`, when given.
pub fn plot(spec: &PlotSpec, config: Option<&str>, plans: Option<&Path>) -> Result<u8, CliError> {
    let rows = output::read_trajectory(&spec.trajectory)?;
    let s = config.map(scenario::load).transpose()?.map(|l| l.scenario);
    let plans: BTreeMap<u32, Plan> = match plans {
        Some(p) => read_plans(p)?.into_iter().filter_map(|a| Some((a.agent, a.plan?))).collect(),
        None => BTreeMap::new(),
    };
    let doc = plot::render(spec, &rows, s.as_ref(), &plans);
    if let Some(dir) = spec.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    svg::save(&spec.out, &doc).map_err(|e| CliError::io(&spec.out, e))?;
    Ok(EXIT_OK)
}
