//! Continuous-time execution of region plans under single-integrator
//! dynamics.

use std::fmt;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::ltl::eval_word;
use crate::navfield::{control, NavContext, NavError, NavParams, SwitchClock};
use crate::planner::{locate, plan_to_word, Plan};
use crate::workspace::{in_region, spheres_disjoint, Point, Region, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    T1,
    T2,
    Arrived,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::T1 => "T1",
            Phase::T2 => "T2",
            Phase::Arrived => "ARRIVED",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    TransitionStarted,
    RegionExited,
    SwitchComplete,
    Arrived,
    CollisionViolation,
    RegionViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub agent: u32,
    pub kind: EventKind,
    pub data: serde_json::Value,
}

/// One recorded trajectory row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub agent: u32,
    pub position: Point,
    pub control: Point,
    pub edge: (u32, u32),
    pub phase: Phase,
}

/// Receives trajectory samples and events while a run progresses.
pub trait Observer {
    fn sample(&mut self, _s: &Sample) {}
    fn event(&mut self, _e: &Event) {}
}

/// Discards everything.
pub struct NoObserver;

impl Observer for NoObserver {}

/// Keeps every sample in memory.
#[derive(Debug, Default)]
pub struct Recorder {
    pub samples: Vec<Sample>,
}

impl Observer for Recorder {
    fn sample(&mut self, s: &Sample) {
        self.samples.push(*s);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Collision { a: u32, b: u32, clearance: f64 },
    Region { agent: u32, region: u32, clearance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeRecord {
    pub agent: u32,
    pub src: u32,
    pub dst: u32,
    pub t0: f64,
    pub t_exit: Option<f64>,
    pub nu: Option<f64>,
    pub t_f: Option<f64>,
    /// Whether `t_f - t' > nu`, i.e. the blend finished before arrival.
    pub blend_finished: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentVerdict {
    pub id: u32,
    pub plan: Plan,
    pub expected: Vec<u32>,
    pub realized: Vec<u32>,
    pub conformant: bool,
    /// Conformant, and the plan's word satisfies the formula.
    pub satisfies_formula: bool,
    pub max_abs_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub completed: bool,
    pub steps: u64,
    pub t_end: f64,
    pub dt: f64,
    pub clamp: Option<f64>,
    /// Smallest `|p_i - p_j| - (r_i + r_j)` seen; `None` with one agent.
    pub min_agent_clearance: Option<f64>,
    /// Smallest clearance of a moving agent to a region off its edge.
    pub min_region_clearance: Option<f64>,
    pub max_abs_u: f64,
    pub agents: Vec<AgentVerdict>,
    pub edges: Vec<EdgeRecord>,
    pub violations: Vec<Violation>,
    pub error: Option<String>,
}

impl Verdict {
    pub fn conformant(&self) -> bool {
        self.completed && self.violations.is_empty() && self.agents.iter().all(|a| a.satisfies_formula)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Nav(#[from] NavError),
    #[error("safety violated at t = {t:.3}: {count} violation(s)")]
    Safety { t: f64, count: usize },
    #[error("step budget of {0} steps exhausted before all agents completed")]
    Budget(u64),
    #[error("agent {agent} plan starts in region {plan_start} but the agent is in {actual:?}")]
    PlanStart { agent: u32, plan_start: u32, actual: Option<u32> },
    #[error("plan of agent {agent} mentions unknown region {region}")]
    UnknownRegion { agent: u32, region: u32 },
    #[error("expected {expected} plans, got {got}")]
    PlanCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub verdict: Verdict,
    pub events: Vec<Event>,
    pub positions: Vec<Point>,
}

/// A failed run, with everything recorded up to the failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error}")]
pub struct SimFailure {
    pub error: SimError,
    pub outcome: Box<SimOutcome>,
}

/// Classical fourth-order Runge–Kutta step of `x' = f(t, x)` for a stacked
/// state. Returns the derivative at the start of the step.
pub fn rk4_step<F, E>(t: f64, x: &mut [Point], dt: f64, mut f: F) -> Result<Vec<Point>, E>
where
    F: FnMut(f64, &[Point], &mut [Point]) -> Result<(), E>,
{
    let n = x.len();
    let mut k1 = vec![Point::zeros(); n];
    let mut k2 = vec![Point::zeros(); n];
    let mut k3 = vec![Point::zeros(); n];
    let mut k4 = vec![Point::zeros(); n];
    let mut tmp = vec![Point::zeros(); n];
    f(t, x, &mut k1)?;
    for i in 0..n {
        tmp[i] = x[i] + k1[i] * (dt / 2.0);
    }
    f(t + dt / 2.0, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = x[i] + k2[i] * (dt / 2.0);
    }
    f(t + dt / 2.0, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = x[i] + k3[i] * dt;
    }
    f(t + dt, &tmp, &mut k4)?;
    for i in 0..n {
        x[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
    }
    Ok(k1)
}

/// True once the agent's ball no longer meets the source region.
pub fn detect_exit(p: &Point, r: f64, source: &Region) -> bool {
    spheres_disjoint(p, r, &source.center, source.radius)
}

/// Where a moving agent currently is in its plan.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRuntime {
    pub plan: Plan,
    /// Index in the unrolled plan of the current source region.
    pub cursor: usize,
    pub source: usize,
    pub target: usize,
    pub phase: Phase,
    pub clock: SwitchClock,
    dwell_until: f64,
    switch_done: bool,
    edge_record: usize,
    realized: Vec<u32>,
}

impl AgentRuntime {
    fn moving(&self) -> bool {
        self.phase != Phase::Arrived && self.source != self.target
    }
}

/// Positions plus the discrete state of every agent.
pub struct Simulation<'a> {
    pub scenario: &'a Scenario,
    pub params: Vec<NavParams>,
    pub radii: Vec<f64>,
    pub positions: Vec<Point>,
    pub agents: Vec<AgentRuntime>,
    pub t: f64,
    pub steps: u64,
    events: Vec<Event>,
    edges: Vec<EdgeRecord>,
    violations: Vec<Violation>,
    min_agent_clearance: Option<f64>,
    min_region_clearance: Option<f64>,
    max_abs_u: Vec<f64>,
}

impl<'a> Simulation<'a> {
    /// Places every agent at its start, beginning the first edge of its plan.
    pub fn new(scenario: &'a Scenario, plans: Vec<Plan>) -> Result<Self, SimError> {
        let agents = &scenario.agents;
        if plans.len() != agents.len() {
            return Err(SimError::PlanCount { expected: agents.len(), got: plans.len() });
        }
        let regions = &scenario.regions;
        let index = |agent: u32, id: u32| {
            regions.iter().position(|r| r.id == id).ok_or(SimError::UnknownRegion { agent, region: id })
        };
        let mut runtimes = Vec::with_capacity(plans.len());
        for (spec, plan) in agents.iter().zip(plans) {
            for &r in plan.prefix.iter().chain(&plan.suffix) {
                index(spec.id, r)?;
            }
            let actual = locate(&spec.start, spec.radius, regions).map(|k| regions[k].id);
            if actual != Some(plan.at(0)) {
                return Err(SimError::PlanStart { agent: spec.id, plan_start: plan.at(0), actual });
            }
            runtimes.push(AgentRuntime {
                source: index(spec.id, plan.at(0))?,
                target: index(spec.id, plan.at(1))?,
                realized: vec![plan.at(0)],
                plan,
                cursor: 0,
                phase: Phase::T1,
                clock: SwitchClock::start(0.0),
                dwell_until: 0.0,
                switch_done: false,
                edge_record: 0,
            });
        }
        let mut sim = Simulation {
            scenario,
            params: agents.iter().map(|a| NavParams::for_agent(a, agents)).collect(),
            radii: agents.iter().map(|a| a.radius).collect(),
            positions: agents.iter().map(|a| a.start).collect(),
            max_abs_u: vec![0.0; agents.len()],
            agents: runtimes,
            t: 0.0,
            steps: 0,
            events: Vec::new(),
            edges: Vec::new(),
            violations: Vec::new(),
            min_agent_clearance: None,
            min_region_clearance: None,
        };
        for i in 0..sim.agents.len() {
            sim.begin_edge(i, &mut NoObserver);
        }
        Ok(sim)
    }

    /// Controls of all agents at time `t` for the given positions, using the
    /// current discrete state.
    pub fn controls(&self, t: f64, positions: &[Point], out: &mut [Point]) -> Result<(), NavError> {
        let clamp = self.scenario.sim.clamp;
        for (i, rt) in self.agents.iter().enumerate() {
            out[i] = if rt.moving() {
                let ctx = NavContext {
                    workspace: &self.scenario.workspace,
                    regions: &self.scenario.regions,
                    params: &self.params[i],
                    radii: &self.radii,
                    positions,
                    agent: i,
                    source: Some(rt.source),
                    target: rt.target,
                };
                let mut u = control(t, &ctx, &rt.clock)?;
                if let Some(c) = clamp {
                    u.apply(|x| *x = x.clamp(-c, c));
                }
                u
            } else {
                Point::zeros()
            };
        }
        Ok(())
    }

    /// Advances all agents by one integrator step and returns the controls
    /// applied at the start of the step.
    pub fn step(&mut self) -> Result<Vec<Point>, NavError> {
        let dt = self.scenario.sim.dt;
        let mut x = self.positions.clone();
        let u = rk4_step(self.t, &mut x, dt, |t, p, out| self.controls(t, p, out))?;
        self.positions = x;
        self.steps += 1;
        self.t = self.steps as f64 * dt;
        for (m, ui) in self.max_abs_u.iter_mut().zip(&u) {
            *m = m.max(ui.amax());
        }
        Ok(u)
    }

    /// Pairwise and region clearance violations at the current positions.
    pub fn check_safety(&mut self) -> Vec<Violation> {
        let mut out = Vec::new();
        let agents = &self.scenario.agents;
        for i in 0..agents.len() {
            for j in i + 1..agents.len() {
                let c = (self.positions[i] - self.positions[j]).norm() - (self.radii[i] + self.radii[j]);
                self.min_agent_clearance = Some(self.min_agent_clearance.map_or(c, |m| m.min(c)));
                if c <= 0.0 {
                    out.push(Violation::Collision { a: agents[i].id, b: agents[j].id, clearance: c });
                }
            }
        }
        for (i, rt) in self.agents.iter().enumerate() {
            if !rt.moving() {
                continue;
            }
            for (m, reg) in self.scenario.regions.iter().enumerate() {
                if m == rt.source || m == rt.target {
                    continue;
                }
                let c = (self.positions[i] - reg.center).norm() - (self.radii[i] + reg.radius);
                self.min_region_clearance = Some(self.min_region_clearance.map_or(c, |v| v.min(c)));
                if c <= 0.0 {
                    out.push(Violation::Region { agent: agents[i].id, region: reg.id, clearance: c });
                }
            }
        }
        out
    }

    fn emit(&mut self, obs: &mut impl Observer, agent: usize, kind: EventKind, data: serde_json::Value) {
        let e = Event { t: self.t, agent: self.scenario.agents[agent].id, kind, data };
        obs.event(&e);
        self.events.push(e);
    }

    fn region_id(&self, k: usize) -> u32 {
        self.scenario.regions[k].id
    }

    fn begin_edge(&mut self, i: usize, obs: &mut impl Observer) {
        let t = self.t;
        let (src, dst) = (self.region_id(self.agents[i].source), self.region_id(self.agents[i].target));
        let rt = &mut self.agents[i];
        rt.phase = Phase::T1;
        rt.clock = SwitchClock::start(t);
        rt.switch_done = false;
        rt.edge_record = self.edges.len();
        self.edges.push(EdgeRecord {
            agent: self.scenario.agents[i].id,
            src,
            dst,
            t0: t,
            t_exit: None,
            nu: None,
            t_f: None,
            blend_finished: None,
        });
        self.emit(obs, i, EventKind::TransitionStarted, json!({ "src": src, "dst": dst }));
    }

    /// Exit, switch and arrival bookkeeping for one agent after a step.
    fn update_agent(&mut self, i: usize, obs: &mut impl Observer) {
        let t = self.t;
        let dt = self.scenario.sim.dt;
        let p = self.positions[i];
        let r = self.radii[i];
        let scenario = self.scenario;
        let regions = &scenario.regions;
        let rt = &mut self.agents[i];
        if rt.phase == Phase::Arrived {
            if t >= rt.dwell_until {
                self.advance_cursor(i, obs);
            }
            return;
        }
        let record = rt.edge_record;
        if rt.source == rt.target {
            // Staying put: containment already held when the edge began.
            let t0 = rt.clock.t0;
            self.arrive(i, t0, obs);
            return;
        }
        if rt.phase == Phase::T1 && detect_exit(&p, r, &regions[rt.source]) {
            rt.clock.mark_exit(t, dt);
            rt.phase = Phase::T2;
            let nu = rt.clock.nu();
            self.edges[record].t_exit = Some(t);
            self.edges[record].nu = nu;
            self.emit(obs, i, EventKind::RegionExited, json!({ "nu": nu }));
        }
        let rt = &mut self.agents[i];
        if rt.phase == Phase::T2 && !rt.switch_done && rt.clock.blend(t) >= 1.0 {
            rt.switch_done = true;
            self.emit(obs, i, EventKind::SwitchComplete, serde_json::Value::Null);
        }
        let rt = &self.agents[i];
        if in_region(&p, r, &regions[rt.target]) {
            self.arrive(i, t, obs);
        }
    }

    fn arrive(&mut self, i: usize, t_f: f64, obs: &mut impl Observer) {
        let rt = &mut self.agents[i];
        let record = &mut self.edges[rt.edge_record];
        record.t_f = Some(t_f);
        if let (Some(t_exit), Some(nu)) = (record.t_exit, record.nu) {
            record.blend_finished = Some(t_f - t_exit > nu);
        }
        let dst = record.dst;
        rt.realized.push(dst);
        rt.phase = Phase::Arrived;
        rt.dwell_until = self.t + self.scenario.sim.dwell;
        self.emit(obs, i, EventKind::Arrived, json!({ "region": dst, "t_f": t_f }));
        if self.scenario.sim.dwell <= 0.0 {
            self.advance_cursor(i, obs);
        }
    }

    fn advance_cursor(&mut self, i: usize, obs: &mut impl Observer) {
        let rt = &mut self.agents[i];
        rt.cursor += 1;
        rt.source = rt.target;
        let next = rt.plan.at(rt.cursor + 1);
        rt.target = self.scenario.regions.iter().position(|r| r.id == next).expect("plan regions checked");
        self.begin_edge(i, obs);
    }

    /// Arrivals each agent needs to have completed the configured cycles.
    fn required(&self, i: usize) -> usize {
        let plan = &self.agents[i].plan;
        plan.prefix.len() + self.scenario.sim.max_cycles * plan.suffix.len()
    }

    pub fn all_done(&self) -> bool {
        (0..self.agents.len()).all(|i| self.agents[i].realized.len() > self.required(i))
    }

    fn emit_samples(&self, obs: &mut impl Observer, t: f64, positions: &[Point], u: &[Point]) {
        for (i, rt) in self.agents.iter().enumerate() {
            obs.sample(&Sample {
                t,
                agent: self.scenario.agents[i].id,
                position: positions[i],
                control: u[i],
                edge: (self.region_id(rt.source), self.region_id(rt.target)),
                phase: rt.phase,
            });
        }
    }

    fn record_violations(&mut self, found: Vec<Violation>, obs: &mut impl Observer) {
        for v in found {
            let (i, kind) = match &v {
                Violation::Collision { a, .. } => (*a, EventKind::CollisionViolation),
                Violation::Region { agent, .. } => (*agent, EventKind::RegionViolation),
            };
            let idx = self.scenario.agents.iter().position(|a| a.id == i).unwrap_or(0);
            self.emit(obs, idx, kind, serde_json::to_value(&v).unwrap_or_default());
            self.violations.push(v);
        }
    }

    /// Runs until every agent has completed its cycles, a safety violation
    /// occurs, or the step budget is exhausted.
    pub fn run(mut self, obs: &mut impl Observer) -> Result<SimOutcome, SimFailure> {
        let cfg = &self.scenario.sim;
        let (stride, budget) = (cfg.record_stride as u64, cfg.step_budget);
        for e in &self.events {
            obs.event(e);
        }
        let found = self.check_safety();
        if !found.is_empty() {
            let count = found.len();
            self.record_violations(found, obs);
            let t = self.t;
            return Err(self.fail(SimError::Safety { t, count }));
        }
        let mut last_u = vec![Point::zeros(); self.agents.len()];
        let error = loop {
            if self.all_done() {
                break None;
            }
            if self.steps >= budget {
                break Some(SimError::Budget(budget));
            }
            let (t, positions) = (self.t, self.positions.clone());
            let step_index = self.steps;
            let u = match self.step() {
                Ok(u) => u,
                Err(e) => break Some(e.into()),
            };
            if step_index.is_multiple_of(stride) {
                self.emit_samples(obs, t, &positions, &u);
            }
            last_u = u;
            let found = self.check_safety();
            if !found.is_empty() {
                let count = found.len();
                self.record_violations(found, obs);
                break Some(SimError::Safety { t: self.t, count });
            }
            for i in 0..self.agents.len() {
                self.update_agent(i, obs);
            }
        };
        let mut u = vec![Point::zeros(); self.agents.len()];
        if self.controls(self.t, &self.positions, &mut u).is_err() {
            u = last_u;
        }
        self.emit_samples(obs, self.t, &self.positions, &u);
        match error {
            None => Ok(self.outcome(None)),
            Some(e) => Err(self.fail(e)),
        }
    }

    fn fail(self, error: SimError) -> SimFailure {
        let outcome = self.outcome(Some(error.to_string()));
        SimFailure { error, outcome: Box::new(outcome) }
    }

    fn outcome(self, error: Option<String>) -> SimOutcome {
        let completed = error.is_none() && self.all_done();
        let agents = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, rt)| {
                let spec = &self.scenario.agents[i];
                let expected = rt.plan.unroll(self.scenario.sim.max_cycles);
                let conformant =
                    rt.realized.len() >= expected.len() && rt.realized[..expected.len()] == expected[..];
                let word_ok = spec
                    .parse_formula()
                    .map(|f| eval_word(&f, &plan_to_word(&rt.plan, |r| spec.label(r))))
                    .unwrap_or(false);
                AgentVerdict {
                    id: spec.id,
                    plan: rt.plan.clone(),
                    expected,
                    realized: rt.realized.clone(),
                    conformant,
                    satisfies_formula: conformant && word_ok,
                    max_abs_u: self.max_abs_u[i],
                }
            })
            .collect();
        SimOutcome {
            verdict: Verdict {
                completed,
                steps: self.steps,
                t_end: self.t,
                dt: self.scenario.sim.dt,
                clamp: self.scenario.sim.clamp,
                min_agent_clearance: self.min_agent_clearance,
                min_region_clearance: self.min_region_clearance,
                max_abs_u: self.max_abs_u.iter().copied().fold(0.0, f64::max),
                agents,
                edges: self.edges,
                violations: self.violations,
                error,
            },
            events: self.events,
            positions: self.positions,
        }
    }
}

/// Convenience wrapper around [`Simulation::new`] and [`Simulation::run`].
pub fn run(scenario: &Scenario, plans: Vec<Plan>, obs: &mut impl Observer) -> Result<SimOutcome, SimFailure> {
    match Simulation::new(scenario, plans) {
        Ok(sim) => sim.run(obs),
        Err(error) => Err(SimFailure {
            outcome: Box::new(SimOutcome {
                verdict: Verdict {
                    completed: false,
                    steps: 0,
                    t_end: 0.0,
                    dt: scenario.sim.dt,
                    clamp: scenario.sim.clamp,
                    min_agent_clearance: None,
                    min_region_clearance: None,
                    max_abs_u: 0.0,
                    agents: Vec::new(),
                    edges: Vec::new(),
                    violations: Vec::new(),
                    error: Some(error.to_string()),
                },
                events: Vec::new(),
                positions: scenario.agents.iter().map(|a| a.start).collect(),
            }),
            error,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::{AgentSpec, FTerm, Gains, SimConfig, Workspace};
    use std::collections::BTreeMap;

    fn agent(id: u32, start: Point) -> AgentSpec {
        AgentSpec {
            id,
            radius: 0.3,
            sensing: 0.65,
            start,
            formula: "true".into(),
            labels: BTreeMap::new(),
            props: None,
            gains: Gains { kg: 3.0, lambda: 2.0 },
            fterm: FTerm::default(),
        }
    }

    fn scenario(regions: Vec<Region>, agents: Vec<AgentSpec>) -> Scenario {
        Scenario {
            workspace: Workspace { dim: 2, center: Point::zeros(), radius: 5.0 },
            regions,
            agents,
            sim: SimConfig { max_cycles: 2, ..SimConfig::default() },
        }
    }

    fn region(id: u32, x: f64, y: f64) -> Region {
        Region { id, center: Point::new(x, y, 0.0), radius: 0.4 }
    }

    #[test]
    fn rk4_is_exact_on_constant_fields() {
        let c = Point::new(1.0, -2.0, 0.5);
        let mut x = vec![Point::new(3.0, 1.0, 0.0)];
        let k1 = rk4_step(0.0, &mut x, 0.25, |_, _, out: &mut [Point]| {
            out[0] = c;
            Ok::<(), ()>(())
        })
        .unwrap();
        assert_eq!(k1[0], c);
        assert_eq!(x[0], Point::new(3.25, 0.5, 0.125));
    }

    #[test]
    fn exit_threshold() {
        let reg = Region { id: 1, center: Point::new(0.0, 0.0, 2.0), radius: 0.4 };
        assert!(detect_exit(&Point::new(0.7 + 1e-9, 0.0, 2.0), 0.3, &reg));
        assert!(!detect_exit(&Point::new(0.7, 0.0, 2.0), 0.3, &reg));
        assert!(!detect_exit(&Point::new(0.05, 0.0, 2.0), 0.3, &reg));
    }

    #[test]
    fn staying_put_does_not_move() {
        let s = scenario(vec![region(1, 0.0, 0.0)], vec![agent(1, Point::zeros())]);
        let plan = Plan { prefix: vec![], suffix: vec![1] };
        let mut rec = Recorder::default();
        let out = run(&s, vec![plan], &mut rec).unwrap();
        assert!(out.verdict.completed);
        assert_eq!(out.positions[0], Point::zeros());
        assert!(rec.samples.iter().all(|x| x.control == Point::zeros()));
        assert_eq!(out.verdict.agents[0].realized, vec![1, 1, 1]);
        let (open, closed) = out.verdict.edges.split_last().unwrap();
        assert!(closed.iter().all(|e| e.t_f == Some(e.t0)));
        assert_eq!(open.t_f, None);
        assert!(out.verdict.conformant());
    }

    #[test]
    fn safety_checks() {
        let mut s = scenario(
            vec![region(1, 0.0, 0.0), region(2, 2.0, 0.0), region(3, 4.0, 0.0)],
            vec![agent(1, Point::zeros()), agent(2, Point::new(4.0, 0.0, 0.0))],
        );
        s.workspace.radius = 6.0;
        let plans = vec![Plan { prefix: vec![], suffix: vec![1, 3] }, Plan { prefix: vec![], suffix: vec![3] }];
        let mut sim = Simulation::new(&s, plans).unwrap();
        assert!(sim.check_safety().is_empty());

        // Agent 1 grazes region 2 while heading for region 3.
        sim.positions[0] = Point::new(2.0 - 0.7, 0.0, 0.0);
        let v = sim.check_safety();
        assert!(matches!(v.as_slice(), [Violation::Region { agent: 1, region: 2, .. }]));

        sim.positions[0] = sim.positions[1];
        let v = sim.check_safety();
        assert!(v.iter().any(|x| matches!(x, Violation::Collision { a: 1, b: 2, .. })));
    }

    #[test]
    fn plan_must_start_where_the_agent_is() {
        let s = scenario(vec![region(1, 0.0, 0.0), region(2, 2.0, 0.0)], vec![agent(1, Point::zeros())]);
        let err = Simulation::new(&s, vec![Plan { prefix: vec![], suffix: vec![2, 1] }]).err().unwrap();
        assert!(matches!(err, SimError::PlanStart { agent: 1, plan_start: 2, actual: Some(1) }));
    }
}
