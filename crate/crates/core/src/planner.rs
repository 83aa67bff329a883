//! Region-level transition systems, their product with a Büchi automaton,
//! and prefix/suffix plan extraction.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::buchi::{translate, BuchiAutomaton};
use crate::ltl::{normalize, AtomSet, ParseError, UltimatelyPeriodicWord};
use crate::search::{find_accepting_lasso, LassoGraph};
use crate::workspace::{in_region, AgentSpec, Point, Region};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("agent {agent} starts at {start:?}, which is not inside any region")]
    OutsideRegions { agent: u32, start: [f64; 3] },
    #[error("agent {agent}: {source}")]
    Formula { agent: u32, source: ParseError },
}

/// Complete digraph over the regions, self-loops included. States are
/// indexed like the region slice it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSystem {
    pub region_ids: Vec<u32>,
    pub initial: usize,
    pub props: AtomSet,
    pub labels: Vec<AtomSet>,
}

impl TransitionSystem {
    pub fn len(&self) -> usize {
        self.region_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region_ids.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |a| (0..n).map(move |b| (a, b)))
    }

    pub fn index_of(&self, region: u32) -> Option<usize> {
        self.region_ids.iter().position(|&r| r == region)
    }
}

/// Index of the region whose ball contains the agent's ball, if any.
pub fn locate(p: &Point, radius: f64, regions: &[Region]) -> Option<usize> {
    regions.iter().position(|r| in_region(p, radius, r))
}

pub fn build_ts(regions: &[Region], agent: &AgentSpec) -> Result<TransitionSystem, PlanError> {
    let initial = locate(&agent.start, agent.radius, regions).ok_or(PlanError::OutsideRegions {
        agent: agent.id,
        start: [agent.start.x, agent.start.y, agent.start.z],
    })?;
    Ok(TransitionSystem {
        region_ids: regions.iter().map(|r| r.id).collect(),
        initial,
        props: agent.props(),
        labels: regions.iter().map(|r| agent.label(r.id)).collect(),
    })
}

/// `T × C`. Node `(region, q)` means the agent is in `region` and the
/// automaton has just read that region's label and moved to `q`.
pub struct ProductAutomaton<'a> {
    pub ts: &'a TransitionSystem,
    pub buchi: &'a BuchiAutomaton,
    // enabled[q][r]: automaton successors of q when reading the label of r.
    enabled: Vec<Vec<Vec<usize>>>,
}

impl<'a> ProductAutomaton<'a> {
    pub fn node(&self, region: usize, q: usize) -> usize {
        region * self.buchi.states + q
    }

    pub fn split(&self, node: usize) -> (usize, usize) {
        (node / self.buchi.states, node % self.buchi.states)
    }
}

pub fn product<'a>(ts: &'a TransitionSystem, b: &'a BuchiAutomaton) -> ProductAutomaton<'a> {
    let mut enabled = vec![vec![Vec::new(); ts.len()]; b.states];
    for e in &b.edges {
        for (r, label) in ts.labels.iter().enumerate() {
            if e.guard.holds(label) {
                enabled[e.src][r].push(e.dst);
            }
        }
    }
    for per_q in &mut enabled {
        for dsts in per_q {
            dsts.sort_unstable();
            dsts.dedup();
        }
    }
    ProductAutomaton { ts, buchi: b, enabled }
}

impl LassoGraph for ProductAutomaton<'_> {
    fn node_count(&self) -> usize {
        self.ts.len() * self.buchi.states
    }

    fn initial(&self) -> Vec<usize> {
        let r = self.ts.initial;
        let mut out: Vec<usize> = self
            .buchi
            .initial
            .iter()
            .flat_map(|&q0| self.enabled[q0][r].iter().map(move |&q| self.node(r, q)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn successors(&self, node: usize, out: &mut Vec<usize>) {
        let (_, q) = self.split(node);
        // Regions in index order, automaton states ascending: node ids ascend.
        for (r, dsts) in self.enabled[q].iter().enumerate() {
            out.extend(dsts.iter().map(|&d| self.node(r, d)));
        }
    }

    fn is_accepting(&self, node: usize) -> bool {
        self.buchi.accepting.contains(&self.split(node).1)
    }
}

/// A region sequence executed as `prefix · suffix^ω`. The first element of
/// `prefix`, or of `suffix` when the prefix is empty, is the start region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub prefix: Vec<u32>,
    pub suffix: Vec<u32>,
}

impl Plan {
    /// The `n`-th region of the infinite sequence.
    pub fn at(&self, n: usize) -> u32 {
        if n < self.prefix.len() {
            self.prefix[n]
        } else {
            self.suffix[(n - self.prefix.len()) % self.suffix.len()]
        }
    }

    /// Regions visited up to and including the return to the suffix start
    /// after `cycles` repetitions.
    pub fn unroll(&self, cycles: usize) -> Vec<u32> {
        (0..=self.prefix.len() + cycles * self.suffix.len()).map(|n| self.at(n)).collect()
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u32]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "{} | {}", join(&self.prefix), join(&self.suffix))
    }
}

/// Extracts the lasso found by nested depth-first search, projected onto
/// region ids. `None` means the specification is unsatisfiable on this TS.
pub fn find_lasso(pa: &ProductAutomaton) -> Option<Plan> {
    let lasso = find_accepting_lasso(pa)?;
    let region = |n: &usize| pa.ts.region_ids[pa.split(*n).0];
    Some(Plan {
        prefix: lasso.stem.iter().map(region).collect(),
        suffix: lasso.cycle.iter().map(region).collect(),
    })
}

/// Full pipeline for one agent: formula, automaton, transition system,
/// product and lasso. `Ok(None)` means the task is unsatisfiable.
pub fn plan_agent(regions: &[Region], agent: &AgentSpec) -> Result<Option<Plan>, PlanError> {
    let f = agent.parse_formula().map_err(|source| PlanError::Formula { agent: agent.id, source })?;
    let b = translate(&normalize(&f));
    let ts = build_ts(regions, agent)?;
    Ok(find_lasso(&product(&ts, &b)))
}

/// Word of labels seen along the plan. `labels` is looked up by region id.
pub fn plan_to_word(plan: &Plan, labels: impl Fn(u32) -> AtomSet) -> UltimatelyPeriodicWord {
    UltimatelyPeriodicWord::new(
        plan.prefix.iter().map(|&r| labels(r)).collect(),
        plan.suffix.iter().map(|&r| labels(r)).collect(),
    )
    .expect("plans have a nonempty suffix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{eval_word, Formula};
    use crate::workspace::{FTerm, Gains};
    use std::collections::BTreeMap;

    fn regions(n: usize) -> Vec<Region> {
        (0..n)
            .map(|k| Region { id: k as u32 + 1, center: Point::new(3.0 * k as f64, 0.0, 0.0), radius: 0.4 })
            .collect()
    }

    fn agent(start: Point, labels: &[(u32, &[&str])]) -> AgentSpec {
        AgentSpec {
            id: 1,
            radius: 0.3,
            sensing: 0.65,
            start,
            formula: "true".into(),
            labels: labels
                .iter()
                .map(|(r, a)| (*r, a.iter().map(|s| s.to_string()).collect()))
                .collect::<BTreeMap<_, _>>(),
            props: None,
            gains: Gains { kg: 1.0, lambda: 2.0 },
            fterm: FTerm::default(),
        }
    }

    fn plan_for(ts: &TransitionSystem, f: &str) -> Option<Plan> {
        let f: Formula = f.parse().unwrap();
        let b = translate(&normalize(&f));
        find_lasso(&product(ts, &b))
    }

    #[test]
    fn ts_is_complete() {
        let regs = regions(5);
        let ts = build_ts(&regs, &agent(Point::zeros(), &[])).unwrap();
        assert_eq!(ts.initial, 0);
        assert_eq!(ts.len(), 5);
        assert_eq!(ts.edges().count(), 25);
        let one = build_ts(&regs[..1], &agent(Point::zeros(), &[])).unwrap();
        assert_eq!(one.edges().collect::<Vec<_>>(), vec![(0, 0)]);
        let err = build_ts(&regs, &agent(Point::new(1.5, 0.0, 0.0), &[])).unwrap_err();
        assert!(matches!(err, PlanError::OutsideRegions { agent: 1, .. }));
    }

    #[test]
    fn single_state_products() {
        let regs = regions(1);
        let ts = build_ts(&regs, &agent(Point::zeros(), &[(1, &["a"])])).unwrap();
        assert_eq!(plan_for(&ts, "[]a"), Some(Plan { prefix: vec![], suffix: vec![1] }));
        assert_eq!(plan_for(&ts, "[]!a"), None);
        assert_eq!(plan_for(&ts, "[]a && []!a"), None);
    }

    #[test]
    fn plans_satisfy_their_formula() {
        let regs = regions(3);
        let ag = agent(Point::zeros(), &[(1, &["a"]), (2, &["b"]), (3, &["c"])]);
        let ts = build_ts(&regs, &ag).unwrap();
        for f in ["[]<>a && []<>c", "[]!b && []<>(a && X c)", "<>[]c", "a U (b && X X c)", "[]<>(c && X X a)"] {
            let plan = plan_for(&ts, f).unwrap_or_else(|| panic!("no plan for {f}"));
            assert_eq!(plan.at(0), 1);
            let w = plan_to_word(&plan, |r| ag.label(r));
            assert!(eval_word(&f.parse().unwrap(), &w), "{f}: {plan}");
        }
        assert_eq!(plan_for(&ts, "b"), None);
    }

    #[test]
    fn planning_is_deterministic() {
        let regs = regions(4);
        let ag = agent(Point::new(3.0, 0.0, 0.0), &[(1, &["a"]), (3, &["b"]), (4, &["a", "b"])]);
        let ts = build_ts(&regs, &ag).unwrap();
        let f = "[]<>(a && X b) && []<>!a";
        assert_eq!(plan_for(&ts, f), plan_for(&ts, f));
        assert_eq!(plan_for(&ts, f).unwrap().at(0), 2);
    }

    #[test]
    fn plan_words_use_labels() {
        let labels = |r: u32| match r {
            2 => AtomSet::from(["ins_a".to_string()]),
            3 => AtomSet::from(["ins_b".to_string()]),
            4 => AtomSet::from(["ins_c".to_string()]),
            5 => AtomSet::from(["ins_d".to_string()]),
            _ => AtomSet::new(),
        };
        let plan = Plan { prefix: vec![3], suffix: vec![2, 5, 4] };
        let w = plan_to_word(&plan, labels);
        assert_eq!(w.prefix(), &[labels(3)]);
        assert_eq!(w.cycle(), &[labels(2), labels(5), labels(4)]);
        let empty = plan_to_word(&Plan { prefix: vec![], suffix: vec![1] }, labels);
        assert!(empty.cycle()[0].is_empty());
        assert_eq!(plan.unroll(2), vec![3, 2, 5, 4, 2, 5, 4, 2]);
        assert_eq!(plan.to_string(), "3 | 2 5 4");
    }
}
