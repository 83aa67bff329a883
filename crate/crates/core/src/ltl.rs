//! Linear temporal logic: syntax tree, concrete syntax, negation normal form
//! and exact evaluation on ultimately periodic words.
//!
//! Concrete syntax (loosest binding first):
//!
//! ```text
//! f ::= f -> f            right associative
//!     | f || f
//!     | f && f
//!     | f U f | f R f     right associative
//!     | ! f | X f | [] f | <> f
//!     | true | false | ident | ( f )
//! ```
//!
//! Identifiers match `[A-Za-z_][A-Za-z0-9_]*`; `true`, `false`, `X`, `U` and
//! `R` are reserved.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// An LTL formula over named atomic propositions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Always(Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Self {
        Formula::Release(Box::new(a), Box::new(b))
    }

    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::Not(f) | Formula::Next(f) | Formula::Always(f) | Formula::Eventually(f) => {
                1 + f.size()
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Not(f) | Formula::Next(f) | Formula::Always(f) | Formula::Eventually(f) => {
                f.collect_atoms(out)
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// True for `true`, `false`, atoms and negated atoms.
    pub fn is_literal(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => matches!(**f, Formula::Atom(_)),
            _ => false,
        }
    }

    /// Whether the formula is in negation normal form: only `true`, `false`,
    /// literals, `&&`, `||`, `X`, `U` and `R`.
    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => matches!(**f, Formula::Atom(_)),
            Formula::Next(f) => f.is_nnf(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) | Formula::Release(a, b) => {
                a.is_nnf() && b.is_nnf()
            }
            Formula::Implies(..) | Formula::Always(_) | Formula::Eventually(_) => false,
        }
    }
}

impl fmt::Display for Formula {
    // Binary operators are always parenthesized so the output parses back to
    // the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => write!(f, "!{g}"),
            Formula::Next(g) => write!(f, "X {g}"),
            Formula::Always(g) => write!(f, "[]{g}"),
            Formula::Eventually(g) => write!(f, "<>{g}"),
            Formula::And(a, b) => write!(f, "({a} && {b})"),
            Formula::Or(a, b) => write!(f, "({a} || {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    /// `position` is the 1-based character column; end of input is one past
    /// the last character.
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown atomic proposition `{name}` at position {position}")]
    UnknownAtom { name: String, position: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    True,
    False,
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Next,
    Until,
    Release,
    Always,
    Eventually,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Not => "`!`".into(),
            Tok::And => "`&&`".into(),
            Tok::Or => "`||`".into(),
            Tok::Implies => "`->`".into(),
            Tok::Next => "`X`".into(),
            Tok::Until => "`U`".into(),
            Tok::Release => "`R`".into(),
            Tok::Always => "`[]`".into(),
            Tok::Eventually => "`<>`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let pair = match (c, chars.get(i + 1)) {
            ('&', Some('&')) => Some(Tok::And),
            ('|', Some('|')) => Some(Tok::Or),
            ('-', Some('>')) => Some(Tok::Implies),
            ('[', Some(']')) => Some(Tok::Always),
            ('<', Some('>')) => Some(Tok::Eventually),
            _ => None,
        };
        let tok = if let Some(t) = pair {
            i += 2;
            t
        } else if c == '(' {
            i += 1;
            Tok::LParen
        } else if c == ')' {
            i += 1;
            Tok::RParen
        } else if c == '!' {
            i += 1;
            Tok::Not
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match word.as_str() {
                "true" => Tok::True,
                "false" => Tok::False,
                "X" => Tok::Next,
                "U" => Tok::Until,
                "R" => Tok::Release,
                _ => Tok::Ident(word),
            }
        } else {
            return Err(ParseError::Syntax {
                position: pos,
                message: format!("unexpected character `{c}`"),
            });
        };
        out.push((tok, pos));
    }
    out.push((Tok::Eof, chars.len() + 1));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    props: Option<&'a BTreeSet<String>>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            position: self.pos(),
            message: format!("expected {wanted}, found {}", self.peek().describe()),
        })
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.binary_temporal()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.binary_temporal()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        match self.peek() {
            Tok::Until => {
                self.bump();
                let rhs = self.binary_temporal()?;
                Ok(Formula::until(lhs, rhs))
            }
            Tok::Release => {
                self.bump();
                let rhs = self.binary_temporal()?;
                Ok(Formula::release(lhs, rhs))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Next => {
                self.bump();
                Ok(Formula::next(self.unary()?))
            }
            Tok::Always => {
                self.bump();
                Ok(Formula::always(self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                Ok(Formula::eventually(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(name) => {
                let (_, position) = self.bump();
                if let Some(props) = self.props {
                    if !props.contains(&name) {
                        return Err(ParseError::UnknownAtom { name, position });
                    }
                }
                Ok(Formula::Atom(name))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.implication()?;
                if *self.peek() != Tok::RParen {
                    return self.unexpected("`)`");
                }
                self.bump();
                Ok(inner)
            }
            _ => self.unexpected("a formula"),
        }
    }
}

fn parse_with(text: &str, props: Option<&BTreeSet<String>>) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        props,
    };
    let f = p.implication()?;
    if *p.peek() != Tok::Eof {
        return p.unexpected("end of input");
    }
    Ok(f)
}

/// Parses `text`, rejecting atoms outside `props`.
pub fn parse_formula(text: &str, props: &BTreeSet<String>) -> Result<Formula, ParseError> {
    parse_with(text, Some(props))
}

impl FromStr for Formula {
    type Err = ParseError;

    /// Parses without restricting the atom vocabulary.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_with(s, None)
    }
}

/// Rewrites into negation normal form, eliminating `->`, `[]` and `<>`.
pub fn normalize(f: &Formula) -> Formula {
    nnf(f, false)
}

fn nnf(f: &Formula, neg: bool) -> Formula {
    use Formula::*;
    match (f, neg) {
        (True, false) | (False, true) => True,
        (True, true) | (False, false) => False,
        (Atom(a), false) => Atom(a.clone()),
        (Atom(a), true) => Formula::not(Atom(a.clone())),
        (Not(g), _) => nnf(g, !neg),
        (And(a, b), false) => Formula::and(nnf(a, false), nnf(b, false)),
        (And(a, b), true) => Formula::or(nnf(a, true), nnf(b, true)),
        (Or(a, b), false) => Formula::or(nnf(a, false), nnf(b, false)),
        (Or(a, b), true) => Formula::and(nnf(a, true), nnf(b, true)),
        (Implies(a, b), false) => Formula::or(nnf(a, true), nnf(b, false)),
        (Implies(a, b), true) => Formula::and(nnf(a, false), nnf(b, true)),
        (Next(g), _) => Formula::next(nnf(g, neg)),
        (Until(a, b), false) => Formula::until(nnf(a, false), nnf(b, false)),
        (Until(a, b), true) => Formula::release(nnf(a, true), nnf(b, true)),
        (Release(a, b), false) => Formula::release(nnf(a, false), nnf(b, false)),
        (Release(a, b), true) => Formula::until(nnf(a, true), nnf(b, true)),
        (Eventually(g), false) => Formula::until(True, nnf(g, false)),
        (Eventually(g), true) => Formula::release(False, nnf(g, true)),
        (Always(g), false) => Formula::release(False, nnf(g, false)),
        (Always(g), true) => Formula::until(True, nnf(g, true)),
    }
}

/// The set of propositions true at one position of a word.
pub type AtomSet = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("the cycle of an ultimately periodic word must be nonempty")]
pub struct EmptyCycle;

/// The infinite word `prefix · cycle^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UltimatelyPeriodicWord {
    prefix: Vec<AtomSet>,
    cycle: Vec<AtomSet>,
}

impl UltimatelyPeriodicWord {
    pub fn new(prefix: Vec<AtomSet>, cycle: Vec<AtomSet>) -> Result<Self, EmptyCycle> {
        if cycle.is_empty() {
            return Err(EmptyCycle);
        }
        Ok(Self { prefix, cycle })
    }

    pub fn prefix(&self) -> &[AtomSet] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[AtomSet] {
        &self.cycle
    }

    /// Letter at position `i` of the infinite word.
    pub fn letter(&self, i: usize) -> &AtomSet {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// Number of distinct lasso positions, `|prefix| + |cycle|`.
    pub fn positions(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }
}

/// Maps proposition names to bit indices so letters become bitmasks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alphabet {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Alphabet {
    /// At most 64 propositions are supported.
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        assert!(set.len() <= 64, "alphabets are limited to 64 propositions");
        let names: Vec<String> = set.into_iter().collect();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        Self { names, index }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bit(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    /// Bitmask of the letter; names outside the alphabet are ignored.
    pub fn mask(&self, letter: &AtomSet) -> u64 {
        letter
            .iter()
            .filter_map(|a| self.bit(a))
            .fold(0, |m, b| m | (1 << b))
    }

    pub fn word(&self, w: &UltimatelyPeriodicWord) -> LetterWord {
        LetterWord {
            prefix: w.prefix.iter().map(|l| self.mask(l)).collect(),
            cycle: w.cycle.iter().map(|l| self.mask(l)).collect(),
        }
    }
}

/// An ultimately periodic word with letters encoded against an [`Alphabet`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LetterWord {
    pub prefix: Vec<u64>,
    pub cycle: Vec<u64>,
}

impl LetterWord {
    pub fn positions(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn letter(&self, pos: usize) -> u64 {
        if pos < self.prefix.len() {
            self.prefix[pos]
        } else {
            self.cycle[pos - self.prefix.len()]
        }
    }

    /// Successor of a lasso position: the last cycle position wraps back to
    /// the first one.
    pub fn succ(&self, pos: usize) -> usize {
        if pos + 1 < self.positions() {
            pos + 1
        } else {
            self.prefix.len()
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    True,
    False,
    Atom(u64),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Next(usize),
    Until(usize, usize),
    Release(usize, usize),
    Always(usize),
    Eventually(usize),
}

/// A formula flattened for repeated evaluation on lassos.
///
/// Each subformula gets one truth value per lasso position. `U` is the least
/// and `R` the greatest fixpoint of its one-step unfolding over the lasso
/// graph, which is exact LTL semantics since a lasso position and its
/// successor determine every later suffix.
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    ops: Vec<Op>,
}

impl CompiledFormula {
    /// Atoms missing from `alphabet` evaluate to false everywhere.
    pub fn new(f: &Formula, alphabet: &Alphabet) -> Self {
        let mut ops = Vec::with_capacity(f.size());
        Self::flatten(f, alphabet, &mut ops);
        Self { ops }
    }

    fn flatten(f: &Formula, alphabet: &Alphabet, ops: &mut Vec<Op>) -> usize {
        let op = match f {
            Formula::True => Op::True,
            Formula::False => Op::False,
            Formula::Atom(a) => Op::Atom(alphabet.bit(a).map_or(0, |b| 1 << b)),
            Formula::Not(g) => Op::Not(Self::flatten(g, alphabet, ops)),
            Formula::Next(g) => Op::Next(Self::flatten(g, alphabet, ops)),
            Formula::Always(g) => Op::Always(Self::flatten(g, alphabet, ops)),
            Formula::Eventually(g) => Op::Eventually(Self::flatten(g, alphabet, ops)),
            Formula::And(a, b) => {
                let (a, b) = (Self::flatten(a, alphabet, ops), Self::flatten(b, alphabet, ops));
                Op::And(a, b)
            }
            Formula::Or(a, b) => {
                let (a, b) = (Self::flatten(a, alphabet, ops), Self::flatten(b, alphabet, ops));
                Op::Or(a, b)
            }
            Formula::Implies(a, b) => {
                let (a, b) = (Self::flatten(a, alphabet, ops), Self::flatten(b, alphabet, ops));
                Op::Implies(a, b)
            }
            Formula::Until(a, b) => {
                let (a, b) = (Self::flatten(a, alphabet, ops), Self::flatten(b, alphabet, ops));
                Op::Until(a, b)
            }
            Formula::Release(a, b) => {
                let (a, b) = (Self::flatten(a, alphabet, ops), Self::flatten(b, alphabet, ops));
                Op::Release(a, b)
            }
        };
        ops.push(op);
        ops.len() - 1
    }

    /// Truth of the formula at position 0 of `w`.
    pub fn eval(&self, w: &LetterWord) -> bool {
        let mut scratch = Vec::new();
        self.eval_with(w, &mut scratch)
    }

    /// Same as [`eval`](Self::eval), reusing `scratch` between calls.
    pub fn eval_with(&self, w: &LetterWord, scratch: &mut Vec<bool>) -> bool {
        let n = w.positions();
        scratch.clear();
        scratch.resize(self.ops.len() * n, false);
        let v = scratch.as_mut_slice();
        for (k, op) in self.ops.iter().enumerate() {
            let (done, rest) = v.split_at_mut(k * n);
            let out = &mut rest[..n];
            let sub = |i: usize| &done[i * n..(i + 1) * n];
            match *op {
                Op::True => out.fill(true),
                Op::False => out.fill(false),
                Op::Atom(mask) => {
                    for (p, o) in out.iter_mut().enumerate() {
                        *o = w.letter(p) & mask != 0;
                    }
                }
                Op::Not(a) => {
                    for (o, x) in out.iter_mut().zip(sub(a)) {
                        *o = !x;
                    }
                }
                Op::And(a, b) => {
                    for (o, (x, y)) in out.iter_mut().zip(sub(a).iter().zip(sub(b))) {
                        *o = *x && *y;
                    }
                }
                Op::Or(a, b) => {
                    for (o, (x, y)) in out.iter_mut().zip(sub(a).iter().zip(sub(b))) {
                        *o = *x || *y;
                    }
                }
                Op::Implies(a, b) => {
                    for (o, (x, y)) in out.iter_mut().zip(sub(a).iter().zip(sub(b))) {
                        *o = !*x || *y;
                    }
                }
                Op::Next(a) => {
                    let a = sub(a);
                    for (p, o) in out.iter_mut().enumerate() {
                        *o = a[w.succ(p)];
                    }
                }
                Op::Until(a, b) => until_fixpoint(w, Some(sub(a)), sub(b), out),
                Op::Eventually(b) => until_fixpoint(w, None, sub(b), out),
                Op::Release(a, b) => release_fixpoint(w, Some(sub(a)), sub(b), out),
                Op::Always(b) => release_fixpoint(w, None, sub(b), out),
            }
        }
        v[(self.ops.len() - 1) * n]
    }
}

// `lhs = None` stands for `true`.
fn until_fixpoint(w: &LetterWord, lhs: Option<&[bool]>, rhs: &[bool], out: &mut [bool]) {
    out.fill(false);
    loop {
        let mut changed = false;
        for p in (0..out.len()).rev() {
            let v = rhs[p] || (lhs.is_none_or(|a| a[p]) && out[w.succ(p)]);
            if v != out[p] {
                out[p] = v;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

// `lhs = None` stands for `false`.
fn release_fixpoint(w: &LetterWord, lhs: Option<&[bool]>, rhs: &[bool], out: &mut [bool]) {
    out.fill(true);
    loop {
        let mut changed = false;
        for p in (0..out.len()).rev() {
            let v = rhs[p] && (lhs.is_some_and(|a| a[p]) || out[w.succ(p)]);
            if v != out[p] {
                out[p] = v;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Decides `w ⊨ f`.
pub fn eval_word(f: &Formula, w: &UltimatelyPeriodicWord) -> bool {
    let alphabet = Alphabet::new(f.atoms());
    CompiledFormula::new(f, &alphabet).eval(&alphabet.word(w))
}
