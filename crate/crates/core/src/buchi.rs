//! LTL to Büchi automaton translation and lasso acceptance.
//!
//! The translation is the on-the-fly tableau expansion over sets of
//! subformulas (obligations now, obligations for the next step). It yields a
//! generalized Büchi automaton with one acceptance set per `U` subformula,
//! which is then degeneralized with a round-robin counter.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::{normalize, Alphabet, AtomSet, Formula, LetterWord, UltimatelyPeriodicWord};
use crate::search::{LassoGraph, NestedDfs};

/// A conjunction of literals. The empty conjunction is `true`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Guard {
    pub pos: BTreeSet<String>,
    pub neg: BTreeSet<String>,
}

impl Guard {
    pub fn is_true(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }

    pub fn holds(&self, letter: &AtomSet) -> bool {
        self.pos.iter().all(|a| letter.contains(a)) && !self.neg.iter().any(|a| letter.contains(a))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &String> {
        self.pos.iter().chain(&self.neg)
    }

    /// Parses the textual form produced by `Display`: `true` or literals
    /// joined by `&&`.
    pub fn parse(text: &str) -> Result<Self, AutomatonError> {
        let bad = || AutomatonError::Guard(text.to_string());
        let f: Formula = text.parse().map_err(|_| bad())?;
        let mut guard = Guard::default();
        let mut stack = vec![&f];
        while let Some(g) = stack.pop() {
            match g {
                Formula::True => {}
                Formula::Atom(a) => {
                    guard.pos.insert(a.clone());
                }
                Formula::Not(inner) => match inner.as_ref() {
                    Formula::Atom(a) => {
                        guard.neg.insert(a.clone());
                    }
                    _ => return Err(bad()),
                },
                Formula::And(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                _ => return Err(bad()),
            }
        }
        Ok(guard)
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_true() {
            return write!(f, "true");
        }
        let lits: Vec<String> = self
            .pos
            .iter()
            .cloned()
            .chain(self.neg.iter().map(|a| format!("!{a}")))
            .collect();
        write!(f, "{}", lits.join(" && "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: usize,
    pub guard: Guard,
    pub dst: usize,
}

/// A nondeterministic Büchi automaton with states `0..states`. Guards are
/// read against the letter consumed while taking the edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiAutomaton {
    pub alphabet: BTreeSet<String>,
    pub states: usize,
    pub initial: BTreeSet<usize>,
    pub accepting: BTreeSet<usize>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("malformed guard `{0}`")]
    Guard(String),
    #[error("state {0} is out of range")]
    State(usize),
    #[error("guard atom `{0}` is not in the alphabet")]
    Atom(String),
    #[error("invalid automaton JSON: {0}")]
    Json(String),
}

impl BuchiAutomaton {
    /// Checks that every referenced state and atom is declared.
    pub fn validate(&self) -> Result<(), AutomatonError> {
        let in_range = |s: usize| if s < self.states { Ok(()) } else { Err(AutomatonError::State(s)) };
        for &s in self.initial.iter().chain(&self.accepting) {
            in_range(s)?;
        }
        for e in &self.edges {
            in_range(e.src)?;
            in_range(e.dst)?;
            if let Some(a) = e.guard.atoms().find(|a| !self.alphabet.contains(*a)) {
                return Err(AutomatonError::Atom(a.clone()));
            }
        }
        Ok(())
    }

    pub fn edges_from(&self, src: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.src == src)
    }

    /// Whether some run on `w` visits an accepting state infinitely often.
    pub fn accepts_lasso(&self, w: &UltimatelyPeriodicWord) -> bool {
        LassoChecker::new(self).accepts_word(w)
    }

    pub fn to_json(&self) -> AutomatonJson {
        AutomatonJson {
            alphabet: self.alphabet.iter().cloned().collect(),
            states: (0..self.states).collect(),
            initial: self.initial.iter().copied().collect(),
            accepting: self.accepting.iter().copied().collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    src: e.src,
                    dst: e.dst,
                    guard: e.guard.to_string(),
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &AutomatonJson) -> Result<Self, AutomatonError> {
        let states = doc.states.len();
        if doc.states.iter().enumerate().any(|(i, &s)| i != s) {
            return Err(AutomatonError::Json("states must be listed as 0..n".into()));
        }
        let b = BuchiAutomaton {
            alphabet: doc.alphabet.iter().cloned().collect(),
            states,
            initial: doc.initial.iter().copied().collect(),
            accepting: doc.accepting.iter().copied().collect(),
            edges: doc
                .edges
                .iter()
                .map(|e| Ok(Edge { src: e.src, guard: Guard::parse(&e.guard)?, dst: e.dst }))
                .collect::<Result<_, AutomatonError>>()?,
        };
        b.validate()?;
        Ok(b)
    }

    /// Graphviz rendering for inspection.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph buchi {\n  rankdir=LR;\n  node [shape=circle];\n");
        for s in 0..self.states {
            let shape = if self.accepting.contains(&s) { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  q{s} [shape={shape}];");
        }
        for (k, s) in self.initial.iter().enumerate() {
            let _ = writeln!(out, "  init{k} [shape=point];\n  init{k} -> q{s};");
        }
        for e in &self.edges {
            let _ = writeln!(out, "  q{} -> q{} [label=\"{}\"];", e.src, e.dst, e.guard);
        }
        out.push_str("}\n");
        out
    }
}

/// Canonical JSON document for an automaton.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomatonJson {
    pub alphabet: Vec<String>,
    pub states: Vec<usize>,
    pub initial: Vec<usize>,
    pub accepting: Vec<usize>,
    pub edges: Vec<EdgeJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub src: usize,
    pub dst: usize,
    pub guard: String,
}

#[derive(Debug, Clone)]
struct TableauNode {
    incoming: BTreeSet<usize>,
    new: BTreeSet<Formula>,
    old: BTreeSet<Formula>,
    next: BTreeSet<Formula>,
}

fn negate_literal(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(a) => (**a).clone(),
        other => Formula::not(other.clone()),
    }
}

fn untils_in_order(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::Until(a, b) => {
            if !out.contains(f) {
                out.push(f.clone());
            }
            untils_in_order(a, out);
            untils_in_order(b, out);
        }
        Formula::Not(g) | Formula::Next(g) | Formula::Always(g) | Formula::Eventually(g) => {
            untils_in_order(g, out)
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Release(a, b) => {
            untils_in_order(a, out);
            untils_in_order(b, out);
        }
        Formula::True | Formula::False | Formula::Atom(_) => {}
    }
}

fn add_new(node: &mut TableauNode, fs: impl IntoIterator<Item = Formula>) {
    for f in fs {
        if !node.old.contains(&f) {
            node.new.insert(f);
        }
    }
}

/// Expands the tableau. Node 0 is the virtual initial node; the returned
/// vector holds completed nodes with ids `1..`.
fn expand(f: &Formula) -> Vec<TableauNode> {
    let mut done: Vec<TableauNode> = Vec::new();
    let mut work = vec![TableauNode {
        incoming: BTreeSet::from([0]),
        new: BTreeSet::from([f.clone()]),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    }];
    while let Some(mut node) = work.pop() {
        let Some(eta) = node.new.pop_first() else {
            if let Some(twin) = done.iter_mut().find(|d| d.old == node.old && d.next == node.next) {
                twin.incoming.extend(node.incoming);
            } else {
                let id = done.len() + 1;
                work.push(TableauNode {
                    incoming: BTreeSet::from([id]),
                    new: node.next.clone(),
                    old: BTreeSet::new(),
                    next: BTreeSet::new(),
                });
                done.push(node);
            }
            continue;
        };
        if node.old.contains(&eta) {
            work.push(node);
            continue;
        }
        match &eta {
            Formula::True => work.push(node),
            lit if lit.is_literal() => {
                if *lit == Formula::False || node.old.contains(&negate_literal(lit)) {
                    continue;
                }
                node.old.insert(eta);
                work.push(node);
            }
            Formula::And(a, b) => {
                let parts = [(**a).clone(), (**b).clone()];
                node.old.insert(eta.clone());
                add_new(&mut node, parts);
                work.push(node);
            }
            Formula::Next(a) => {
                node.next.insert((**a).clone());
                node.old.insert(eta.clone());
                work.push(node);
            }
            Formula::Or(a, b) | Formula::Until(a, b) | Formula::Release(a, b) => {
                let (now1, next1, now2): (Vec<Formula>, Option<Formula>, Vec<Formula>) = match &eta {
                    Formula::Or(..) => (vec![(**a).clone()], None, vec![(**b).clone()]),
                    Formula::Until(..) => (vec![(**a).clone()], Some(eta.clone()), vec![(**b).clone()]),
                    _ => (
                        vec![(**b).clone()],
                        Some(eta.clone()),
                        vec![(**a).clone(), (**b).clone()],
                    ),
                };
                node.old.insert(eta.clone());
                let mut second = node.clone();
                add_new(&mut second, now2);
                add_new(&mut node, now1);
                if let Some(nx) = next1 {
                    node.next.insert(nx);
                }
                // The first branch is expanded first.
                work.push(second);
                work.push(node);
            }
            other => unreachable!("formula not in negation normal form: {other}"),
        }
    }
    done
}

/// Translates an LTL formula into a language-equivalent Büchi automaton.
/// The formula is normalized first, so any well-formed input is accepted.
/// The alphabet is the set of atoms of the formula.
pub fn translate(f: &Formula) -> BuchiAutomaton {
    let f = if f.is_nnf() { f.clone() } else { normalize(f) };
    let nodes = expand(&f);

    let mut untils = Vec::new();
    untils_in_order(&f, &mut untils);
    // acceptance[k][q]: tableau node q (1-based, 0 = initial) is in set k.
    let acceptance: Vec<Vec<bool>> = untils
        .iter()
        .map(|u| {
            let Formula::Until(_, rhs) = u else { unreachable!() };
            let mut row = vec![false; nodes.len() + 1];
            for (i, n) in nodes.iter().enumerate() {
                row[i + 1] = !n.old.contains(u) || **rhs == Formula::True || n.old.contains(rhs.as_ref());
            }
            row
        })
        .collect();

    let guards: Vec<Guard> = nodes
        .iter()
        .map(|n| {
            let mut g = Guard::default();
            for lit in &n.old {
                match lit {
                    Formula::Atom(a) => {
                        g.pos.insert(a.clone());
                    }
                    Formula::Not(inner) => {
                        if let Formula::Atom(a) = inner.as_ref() {
                            g.neg.insert(a.clone());
                        }
                    }
                    _ => {}
                }
            }
            g
        })
        .collect();

    // Successor lists of the generalized automaton, ordered by node id.
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len() + 1];
    for (i, n) in nodes.iter().enumerate() {
        for &p in &n.incoming {
            succ[p].push(i + 1);
        }
    }
    for s in &mut succ {
        s.sort_unstable();
    }

    // Degeneralize: state (node, counter), explored breadth-first so state
    // numbering follows discovery order.
    let k = acceptance.len().max(1);
    let counter_step = |q: usize, c: usize| -> usize {
        if acceptance.is_empty() {
            0
        } else if acceptance[c][q] {
            (c + 1) % k
        } else {
            c
        }
    };
    let is_accepting = |q: usize, c: usize| -> bool {
        if acceptance.is_empty() {
            true
        } else {
            c == 0 && acceptance[0][q]
        }
    };

    let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    ids.insert((0, 0), 0);
    order.push((0, 0));
    queue.push_back((0, 0));
    let mut edges = Vec::new();
    while let Some((q, c)) = queue.pop_front() {
        let src = ids[&(q, c)];
        let c2 = counter_step(q, c);
        for &r in &succ[q] {
            let key = (r, c2);
            let dst = *ids.entry(key).or_insert_with(|| {
                order.push(key);
                queue.push_back(key);
                order.len() - 1
            });
            edges.push(Edge { src, guard: guards[r - 1].clone(), dst });
        }
    }
    let accepting = order
        .iter()
        .enumerate()
        .filter(|(_, &(q, c))| is_accepting(q, c))
        .map(|(i, _)| i)
        .collect();

    merge_bisimilar(BuchiAutomaton {
        alphabet: f.atoms(),
        states: order.len(),
        initial: BTreeSet::from([0]),
        accepting,
        edges,
    })
}

/// Quotients states that agree on acceptance and on their outgoing
/// (guard, successor class) pairs. Classes are numbered by the first state
/// that belongs to them, so state 0 stays first.
fn merge_bisimilar(b: BuchiAutomaton) -> BuchiAutomaton {
    let mut class: Vec<usize> = (0..b.states).map(|s| usize::from(b.accepting.contains(&s))).collect();
    let mut count = 0;
    loop {
        let mut sigs: BTreeMap<(usize, BTreeSet<(&Guard, usize)>), usize> = BTreeMap::new();
        let mut next = vec![0; b.states];
        let mut outgoing: Vec<BTreeSet<(&Guard, usize)>> = vec![BTreeSet::new(); b.states];
        for e in &b.edges {
            outgoing[e.src].insert((&e.guard, class[e.dst]));
        }
        for (s, out) in outgoing.into_iter().enumerate() {
            let fresh = sigs.len();
            next[s] = *sigs.entry((class[s], out)).or_insert(fresh);
        }
        let stable = sigs.len() == count;
        count = sigs.len();
        class = next;
        if stable {
            break;
        }
    }
    let edges: BTreeSet<(usize, Guard, usize)> =
        b.edges.iter().map(|e| (class[e.src], e.guard.clone(), class[e.dst])).collect();
    BuchiAutomaton {
        alphabet: b.alphabet,
        states: count,
        initial: b.initial.iter().map(|&s| class[s]).collect(),
        accepting: b.accepting.iter().map(|&s| class[s]).collect(),
        edges: edges.into_iter().map(|(src, guard, dst)| Edge { src, guard, dst }).collect(),
    }
}

/// An automaton preprocessed for repeated lasso acceptance queries.
#[derive(Debug, Clone)]
pub struct LassoChecker {
    alphabet: Alphabet,
    initial: Vec<usize>,
    accepting: Vec<bool>,
    // Per state: (required bits, forbidden bits, destination).
    out: Vec<Vec<(u64, u64, usize)>>,
}

impl LassoChecker {
    pub fn new(b: &BuchiAutomaton) -> Self {
        let alphabet = Alphabet::new(b.alphabet.iter().cloned());
        let mask = |atoms: &BTreeSet<String>| {
            atoms.iter().fold(0u64, |m, a| m | alphabet.bit(a).map_or(0, |bit| 1 << bit))
        };
        let mut out = vec![Vec::new(); b.states];
        for e in &b.edges {
            out[e.src].push((mask(&e.guard.pos), mask(&e.guard.neg), e.dst));
        }
        let mut accepting = vec![false; b.states];
        for &s in &b.accepting {
            accepting[s] = true;
        }
        Self {
            initial: b.initial.iter().copied().collect(),
            accepting,
            out,
            alphabet,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn accepts_word(&self, w: &UltimatelyPeriodicWord) -> bool {
        self.accepts(&self.alphabet.word(w))
    }

    /// `w` must be encoded with [`alphabet`](Self::alphabet).
    pub fn accepts(&self, w: &LetterWord) -> bool {
        self.accepts_with(w, &mut NestedDfs::default())
    }

    /// Same as [`accepts`](Self::accepts), reusing search buffers.
    pub fn accepts_with(&self, w: &LetterWord, search: &mut NestedDfs) -> bool {
        search.exists(&WordProduct { checker: self, word: w })
    }
}

// Product of the automaton with the lasso graph of a word. Node
// `q * n + p` means "in state q, about to read position p".
struct WordProduct<'a> {
    checker: &'a LassoChecker,
    word: &'a LetterWord,
}

impl LassoGraph for WordProduct<'_> {
    fn node_count(&self) -> usize {
        self.checker.out.len() * self.word.positions()
    }

    fn initial(&self) -> Vec<usize> {
        let n = self.word.positions();
        self.checker.initial.iter().map(|q| q * n).collect()
    }

    fn successors(&self, node: usize, out: &mut Vec<usize>) {
        let n = self.word.positions();
        let (q, p) = (node / n, node % n);
        let letter = self.word.letter(p);
        let next = self.word.succ(p);
        for &(pos, neg, dst) in &self.checker.out[q] {
            if letter & pos == pos && letter & neg == 0 {
                out.push(dst * n + next);
            }
        }
    }

    fn is_accepting(&self, node: usize) -> bool {
        self.checker.accepting[node / self.word.positions()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::eval_word;

    fn f(s: &str) -> Formula {
        s.parse().unwrap()
    }

    fn all_letters(atoms: &[&str]) -> Vec<AtomSet> {
        (0..1u32 << atoms.len())
            .map(|m| {
                atoms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| m >> i & 1 == 1)
                    .map(|(_, a)| a.to_string())
                    .collect()
            })
            .collect()
    }

    fn lassos(atoms: &[&str], max_prefix: usize, max_cycle: usize) -> Vec<UltimatelyPeriodicWord> {
        let letters = all_letters(atoms);
        let mut seqs: Vec<Vec<Vec<AtomSet>>> = vec![vec![vec![]]];
        for len in 1..=max_prefix.max(max_cycle) {
            let mut next = Vec::new();
            for s in &seqs[len - 1] {
                for l in &letters {
                    let mut t = s.clone();
                    t.push(l.clone());
                    next.push(t);
                }
            }
            seqs.push(next);
        }
        let mut out = Vec::new();
        for p in 0..=max_prefix {
            for c in 1..=max_cycle {
                for pre in &seqs[p] {
                    for cyc in &seqs[c] {
                        out.push(UltimatelyPeriodicWord::new(pre.clone(), cyc.clone()).unwrap());
                    }
                }
            }
        }
        out
    }

    #[test]
    fn true_is_single_universal_state() {
        let b = translate(&Formula::True);
        assert_eq!(b.states, 1);
        assert_eq!(b.initial, BTreeSet::from([0]));
        assert_eq!(b.accepting, BTreeSet::from([0]));
        assert_eq!(b.edges, vec![Edge { src: 0, guard: Guard::default(), dst: 0 }]);
        for w in lassos(&["a"], 1, 2) {
            assert!(b.accepts_lasso(&w));
        }
    }

    #[test]
    fn atom_matches_first_letter() {
        let g = f("a");
        let b = translate(&g);
        for w in lassos(&["a"], 2, 2) {
            assert_eq!(b.accepts_lasso(&w), w.letter(0).contains("a"));
            assert_eq!(b.accepts_lasso(&w), eval_word(&g, &w));
        }
    }

    #[test]
    fn always_not_obs_rejects_any_obs() {
        let g = f("[]!obs");
        let b = translate(&normalize(&g));
        for w in lassos(&["obs"], 2, 2) {
            let has_obs = (0..w.positions()).any(|i| w.letter(i).contains("obs"));
            assert_eq!(b.accepts_lasso(&w), !has_obs);
        }
    }

    #[test]
    fn until_needs_rhs() {
        let b = translate(&f("a U b"));
        let only_a = UltimatelyPeriodicWord::new(vec![], vec![AtomSet::from(["a".to_string()])]).unwrap();
        assert!(!b.accepts_lasso(&only_a));
    }

    #[test]
    fn unsatisfiable_has_no_accepting_run() {
        let b = translate(&f("[]a && <>!a"));
        for w in lassos(&["a"], 2, 2) {
            assert!(!b.accepts_lasso(&w));
        }
    }

    #[test]
    fn matches_oracle_on_mixed_formulas() {
        let words = lassos(&["a", "b"], 2, 2);
        for s in [
            "[]<>a && []<>b",
            "<>[]a || []<>!b",
            "a U (b R a)",
            "X (a -> X b)",
            "[](a -> <>b)",
            "!(a U b) && <>a",
            "[]!b && [](<>a && <>X a)",
            "a && X (b && X a)",
        ] {
            let g = f(s);
            let b = translate(&g);
            b.validate().unwrap();
            for w in &words {
                assert_eq!(b.accepts_lasso(w), eval_word(&g, w), "{s} on {w:?}");
            }
        }
    }

    #[test]
    fn translation_is_deterministic() {
        let g = f("[]!obs && [](<>a && <>b && <>c)");
        assert_eq!(translate(&g), translate(&g));
    }

    #[test]
    fn json_round_trip() {
        let b = translate(&f("[]<>(a && X !b) && (c U b)"));
        let doc = b.to_json();
        let text = serde_json::to_string(&doc).unwrap();
        let back: AutomatonJson = serde_json::from_str(&text).unwrap();
        assert_eq!(BuchiAutomaton::from_json(&back).unwrap(), b);
        assert!(b.to_dot().starts_with("digraph"));
    }

    #[test]
    fn guard_parsing() {
        let g = Guard::parse("a && !b && c").unwrap();
        assert_eq!(g.to_string(), "a && c && !b");
        assert!(Guard::parse("true").unwrap().is_true());
        assert!(Guard::parse("a || b").is_err());
    }

    #[test]
    fn rejects_dangling_state() {
        let mut b = translate(&f("a"));
        b.edges.push(Edge { src: 0, guard: Guard::default(), dst: 99 });
        assert_eq!(b.validate(), Err(AutomatonError::State(99)));
    }
}
