//! Spherical workspace, regions of interest, agents and scenario files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::{parse_formula, AtomSet, Formula, ParseError};

/// Positions are always stored in 3-D; planar scenarios keep z = 0.
pub type Point = Vector3<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub dim: usize,
    pub center: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: u32,
    pub center: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub kg: f64,
    pub lambda: f64,
}

/// Parameters of the shared-goal term `f(G) = eps0 (1 - G/X)^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTerm {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    /// Cutoff; `None` picks a tenth of the plateau value of `G`.
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
}

fn yes() -> bool {
    true
}

fn default_eps0() -> f64 {
    0.1
}

impl Default for FTerm {
    fn default() -> Self {
        Self { enabled: true, eps0: 0.1, x: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub id: u32,
    pub radius: f64,
    pub sensing: f64,
    pub start: Point,
    pub formula: String,
    pub labels: BTreeMap<u32, AtomSet>,
    /// Declared propositions. When absent the label atoms are used.
    pub props: Option<AtomSet>,
    pub gains: Gains,
    pub fterm: FTerm,
}

impl AgentSpec {
    pub fn props(&self) -> AtomSet {
        match &self.props {
            Some(p) => p.clone(),
            None => self.labels.values().flatten().cloned().collect(),
        }
    }

    pub fn label(&self, region: u32) -> AtomSet {
        self.labels.get(&region).cloned().unwrap_or_default()
    }

    pub fn parse_formula(&self) -> Result<Formula, ParseError> {
        parse_formula(&self.formula, &self.props())
    }
}

/// Closed-ball containment `B(p, r) ⊆ B(c, r_π)`.
pub fn in_region(p: &Point, r: f64, reg: &Region) -> bool {
    (p - reg.center).norm() <= reg.radius - r
}

/// True iff the closed balls do not touch.
pub fn spheres_disjoint(c1: &Point, r1: f64, c2: &Point, r2: f64) -> bool {
    (c1 - c2).norm() > r1 + r2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Positive when the condition holds with room to spare.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: String, margin: f64, passed: bool) {
        self.checks.push(Check { name, passed, margin });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "{tag} {:<40} margin {:+.4}", c.name, c.margin)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension must be 2 or 3, got {0}")]
    Dim(usize),
    #[error("{0} must have a positive radius")]
    Radius(String),
    #[error("region {id} (radius {radius}) does not fit in the workspace (radius {r0})")]
    RegionTooLarge { id: u32, radius: f64, r0: f64 },
    #[error("duplicate {kind} id {id}")]
    Duplicate { kind: &'static str, id: u32 },
    #[error("agent {agent} labels unknown region {region}")]
    UnknownRegion { agent: u32, region: u32 },
    #[error("strict validation failed: {}", .0.join(", "))]
    Strict(Vec<String>),
}

/// Checks the well-posedness conditions of the workspace partition and the
/// agent size and sensing assumptions.
///
/// Malformed geometry is always an error. The remaining conditions are
/// reported with their margins, and only become an error when `strict`.
pub fn validate(
    ws: &Workspace,
    regions: &[Region],
    agents: &[AgentSpec],
    strict: bool,
) -> Result<ValidationReport, GeometryError> {
    if ws.dim != 2 && ws.dim != 3 {
        return Err(GeometryError::Dim(ws.dim));
    }
    if !(ws.radius > 0.0) {
        return Err(GeometryError::Radius("workspace".into()));
    }
    let mut ids = BTreeSet::new();
    for r in regions {
        if !(r.radius > 0.0) {
            return Err(GeometryError::Radius(format!("region {}", r.id)));
        }
        if r.radius >= ws.radius {
            return Err(GeometryError::RegionTooLarge { id: r.id, radius: r.radius, r0: ws.radius });
        }
        if !ids.insert(r.id) {
            return Err(GeometryError::Duplicate { kind: "region", id: r.id });
        }
    }
    let mut agent_ids = BTreeSet::new();
    for a in agents {
        if !(a.radius > 0.0) {
            return Err(GeometryError::Radius(format!("agent {}", a.id)));
        }
        if !agent_ids.insert(a.id) {
            return Err(GeometryError::Duplicate { kind: "agent", id: a.id });
        }
        if let Some(&region) = a.labels.keys().find(|k| !ids.contains(k)) {
            return Err(GeometryError::UnknownRegion { agent: a.id, region });
        }
    }

    let mut report = ValidationReport::default();
    let max_rpi = regions.iter().map(|r| r.radius).fold(0.0, f64::max);
    for (n, a) in regions.iter().enumerate() {
        for b in &regions[n + 1..] {
            let margin = (a.center - b.center).norm() - 4.0 * max_rpi;
            report.push(format!("separation {}-{}", a.id, b.id), margin, margin > 0.0);
        }
    }
    for r in regions {
        let d = (r.center - ws.center).norm();
        let margin = ws.radius - (d + r.radius);
        report.push(format!("containment {}", r.id), margin, margin >= 0.0);
        let margin = ws.radius - 3.0 * r.radius - d;
        report.push(format!("boundary {}", r.id), margin, margin > 0.0);
    }
    let min_rpi = regions.iter().map(|r| r.radius).fold(f64::INFINITY, f64::min);
    let max_ri = agents.iter().map(|a| a.radius).fold(0.0, f64::max);
    for a in agents {
        if !regions.is_empty() {
            let margin = min_rpi - a.radius;
            report.push(format!("agent {} size", a.id), margin, margin > 0.0);
        }
        let margin = a.sensing - (a.radius + max_ri);
        report.push(format!("agent {} sensing", a.id), margin, margin > 0.0);
    }

    if strict {
        let failed: Vec<String> = report.failures().map(|c| c.name.clone()).collect();
        if !failed.is_empty() {
            return Err(GeometryError::Strict(failed));
        }
    }
    Ok(report)
}

/// Simulation settings shared by all agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_cycles")]
    pub max_cycles: usize,
    #[serde(default)]
    pub dwell: f64,
    /// Per-axis bound on the control, in m/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Keep one trajectory sample every `record_stride` steps.
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_budget")]
    pub step_budget: u64,
}

fn default_dt() -> f64 {
    0.01
}
fn default_cycles() -> usize {
    2
}
fn default_stride() -> usize {
    1
}
fn default_budget() -> u64 {
    1_000_000
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            max_cycles: default_cycles(),
            dwell: 0.0,
            clamp: None,
            seed: 0,
            record_stride: default_stride(),
            step_budget: default_budget(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub workspace: Workspace,
    pub regions: Vec<Region>,
    pub agents: Vec<AgentSpec>,
    pub sim: SimConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{what}: expected {dim} coordinates, got {got}")]
    Coords { what: String, dim: usize, got: usize },
    #[error("sim.{0} is out of range")]
    Sim(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: ScenarioFile = serde_json::from_str(text)?;
        raw.into_scenario()
    }

    pub fn to_json(&self) -> String {
        let dim = self.workspace.dim;
        let pt = |p: &Point| p.iter().take(dim).copied().collect::<Vec<f64>>();
        let raw = ScenarioFile {
            workspace: WorkspaceFile {
                dim,
                center: pt(&self.workspace.center),
                radius: self.workspace.radius,
            },
            regions: self
                .regions
                .iter()
                .map(|r| RegionFile { id: r.id, center: pt(&r.center), radius: r.radius })
                .collect(),
            agents: self
                .agents
                .iter()
                .map(|a| AgentFile {
                    id: a.id,
                    radius: a.radius,
                    sensing: a.sensing,
                    start: pt(&a.start),
                    formula: a.formula.clone(),
                    labels: a.labels.clone(),
                    props: a.props.clone(),
                    gains: a.gains,
                    fterm: a.fterm,
                })
                .collect(),
            sim: self.sim.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("scenario serializes")
    }

    /// Runs [`validate`] on the scenario.
    pub fn validate(&self, strict: bool) -> Result<ValidationReport, GeometryError> {
        validate(&self.workspace, &self.regions, &self.agents, strict)
    }

    pub fn region(&self, id: u32) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    workspace: WorkspaceFile,
    regions: Vec<RegionFile>,
    agents: Vec<AgentFile>,
    #[serde(default)]
    sim: SimConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkspaceFile {
    dim: usize,
    center: Vec<f64>,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionFile {
    id: u32,
    center: Vec<f64>,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentFile {
    id: u32,
    radius: f64,
    sensing: f64,
    start: Vec<f64>,
    formula: String,
    #[serde(default)]
    labels: BTreeMap<u32, BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    props: Option<BTreeSet<String>>,
    gains: Gains,
    #[serde(default)]
    fterm: FTerm,
}

fn point(what: impl Fn() -> String, dim: usize, v: &[f64]) -> Result<Point, ConfigError> {
    if v.len() != dim {
        return Err(ConfigError::Coords { what: what(), dim, got: v.len() });
    }
    let mut p = Point::zeros();
    for (i, x) in v.iter().enumerate() {
        p[i] = *x;
    }
    Ok(p)
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario, ConfigError> {
        let dim = self.workspace.dim;
        if dim != 2 && dim != 3 {
            return Err(GeometryError::Dim(dim).into());
        }
        let workspace = Workspace {
            dim,
            center: point(|| "workspace center".into(), dim, &self.workspace.center)?,
            radius: self.workspace.radius,
        };
        let regions = self
            .regions
            .into_iter()
            .map(|r| {
                Ok(Region {
                    id: r.id,
                    center: point(|| format!("region {} center", r.id), dim, &r.center)?,
                    radius: r.radius,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let agents = self
            .agents
            .into_iter()
            .map(|a| {
                Ok(AgentSpec {
                    id: a.id,
                    radius: a.radius,
                    sensing: a.sensing,
                    start: point(|| format!("agent {} start", a.id), dim, &a.start)?,
                    formula: a.formula,
                    labels: a.labels,
                    props: a.props,
                    gains: a.gains,
                    fterm: a.fterm,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let sim = self.sim;
        if !(sim.dt > 0.0) {
            return Err(ConfigError::Sim("dt"));
        }
        if sim.max_cycles == 0 {
            return Err(ConfigError::Sim("max_cycles"));
        }
        if sim.record_stride == 0 {
            return Err(ConfigError::Sim("record_stride"));
        }
        if !(sim.dwell >= 0.0) {
            return Err(ConfigError::Sim("dwell"));
        }
        if sim.clamp.is_some_and(|c| !(c > 0.0)) {
            return Err(ConfigError::Sim("clamp"));
        }
        Ok(Scenario { workspace, regions, agents, sim })
    }
}
