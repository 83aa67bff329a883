use std::collections::BTreeMap;

use ltlnav_core::fixtures;
use ltlnav_core::planner::{plan_agent, Plan};
use ltlnav_core::simulator::{run, NoObserver, Recorder, Simulation};
use ltlnav_core::workspace::{AgentSpec, FTerm, Gains, Point, Region, Scenario, SimConfig, Workspace};

fn plans(s: &Scenario) -> Vec<Plan> {
    s.agents.iter().map(|a| plan_agent(&s.regions, a).unwrap().unwrap()).collect()
}

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

fn swap_scenario(offset: f64) -> Scenario {
    let region = |id, x| Region { id, center: Point::new(x, 0.0, 0.0), radius: 0.4 };
    Scenario {
        workspace: Workspace { dim: 2, center: Point::zeros(), radius: 3.5 },
        regions: vec![region(1, -1.5), region(2, 1.5)],
        agents: vec![agent(1, Point::new(-1.5, offset, 0.0)), agent(2, Point::new(1.5, -offset, 0.0))],
        sim: SimConfig { max_cycles: 1, step_budget: 200_000, ..SimConfig::default() },
    }
}

#[test]
fn swapping_agents_pass_each_other() {
    let s = swap_scenario(0.05);
    let p = vec![Plan { prefix: vec![], suffix: vec![1, 2] }, Plan { prefix: vec![], suffix: vec![2, 1] }];
    let out = run(&s, p, &mut NoObserver).unwrap_or_else(|f| panic!("{}: {:?}", f.error, f.outcome.verdict));
    assert!(out.verdict.completed);
    assert!(out.verdict.conformant());
    assert!(out.verdict.min_agent_clearance.unwrap() > 0.0);
    assert!(out.verdict.violations.is_empty());
}

fn integrate(s: &Scenario, p: &[Plan], dt: f64, horizon: f64) -> Vec<Point> {
    let mut s = s.clone();
    s.sim.dt = dt;
    let mut sim = Simulation::new(&s, p.to_vec()).unwrap();
    let n = (horizon / dt).round() as usize;
    for _ in 0..n {
        sim.step().unwrap();
    }
    sim.positions.clone()
}

#[test]
fn rk4_converges_at_fourth_order() {
    // First second of the experiment1 run: both agents are still inside T1.
    let s = fixtures::load("experiment1").unwrap();
    let p = plans(&s);
    let p: Vec<Plan> = p
        .iter()
        .map(|pl| {
            let start = pl.at(0);
            let next = (1..).map(|n| pl.at(n)).find(|&r| r != start).unwrap();
            Plan { prefix: vec![start], suffix: vec![next] }
        })
        .collect();
    let h = 0.04;
    let a = integrate(&s, &p, h, 1.0);
    let b = integrate(&s, &p, h / 2.0, 1.0);
    let c = integrate(&s, &p, h / 4.0, 1.0);
    let diff = |x: &[Point], y: &[Point]| x.iter().zip(y).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
    let (d1, d2) = (diff(&a, &b), diff(&b, &c));
    assert!(d1 > 0.0 && d2 > 0.0);
    assert!(d1 / d2 >= 12.0, "ratio {}", d1 / d2);
}

#[test]
fn runs_are_deterministic() {
    let s = fixtures::load("experiment1").unwrap();
    let mut a = Recorder::default();
    let mut b = Recorder::default();
    let oa = run(&s, plans(&s), &mut a).unwrap();
    let ob = run(&s, plans(&s), &mut b).unwrap();
    assert_eq!(a.samples.len(), b.samples.len());
    assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| x.position == y.position && x.control == y.control));
    assert_eq!(oa.positions, ob.positions);
    assert_eq!(serde_json::to_string(&oa.verdict).unwrap(), serde_json::to_string(&ob.verdict).unwrap());
}

#[test]
fn clamp_bounds_every_axis() {
    let mut s = fixtures::load("experiment1").unwrap();
    s.sim.clamp = Some(1.0);
    let mut rec = Recorder::default();
    let out = run(&s, plans(&s), &mut rec).unwrap();
    assert!(out.verdict.completed && out.verdict.conformant());
    assert!(out.verdict.max_abs_u <= 1.0);
    assert!(rec.samples.iter().all(|x| x.control.amax() <= 1.0));
}
