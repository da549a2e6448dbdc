//! Naive recursive evaluation of +Δ/−Δ/+∂/−∂ on ground theories.
//!
//! The evaluator reads a [`Theory`] only through its public fields and
//! recomputes everything else itself: the conflict relation, the
//! obligation-to-permission conversion rules and the superiority those
//! rules inherit. It recurses on the proof conditions with memoisation, so
//! it only terminates on theories whose dependency graph is acyclic; check
//! with [`is_acyclic`] first.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdu_core::dl::{Atom, Literal, ModalLiteral, Modality, Rule, RuleKind, Status, Term, Theory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Fact,
    Obl,
    Perm,
}

/// A ground modal literal: atom text, sign and modality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit {
    pub atom: String,
    pub neg: bool,
    pub mode: Mode,
}

impl Lit {
    fn from_core(ml: &ModalLiteral) -> Self {
        let a = &ml.literal.atom;
        let args: Vec<&str> = a
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) | Term::Var(c) => c.as_str(),
            })
            .collect();
        Lit {
            atom: format!("{}({})", a.predicate, args.join(",")),
            neg: ml.literal.negated,
            mode: match ml.modality {
                Modality::Fact => Mode::Fact,
                Modality::Obl => Mode::Obl,
                Modality::Perm => Mode::Perm,
            },
        }
    }

    fn flipped(&self, mode: Mode) -> Lit {
        Lit {
            atom: self.atom.clone(),
            neg: !self.neg,
            mode,
        }
    }

    /// Literals that clash with this one.
    pub fn attackers(&self) -> Vec<Lit> {
        match self.mode {
            Mode::Fact => vec![self.flipped(Mode::Fact)],
            Mode::Obl => vec![self.flipped(Mode::Obl), self.flipped(Mode::Perm)],
            Mode::Perm => vec![self.flipped(Mode::Obl)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Strict,
    Defeasible,
    Defeater,
}

#[derive(Debug, Clone)]
struct OracleRule {
    label: String,
    kind: Kind,
    body: Vec<Lit>,
    head: Lit,
}

/// The four proof conditions for one literal, evaluated independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conditions {
    pub plus_delta: bool,
    pub minus_delta: bool,
    pub plus_partial: bool,
    pub minus_partial: bool,
}

impl Conditions {
    pub fn delta(&self) -> Status {
        tri(self.plus_delta, self.minus_delta)
    }

    pub fn partial(&self) -> Status {
        tri(self.plus_partial, self.minus_partial)
    }
}

fn tri(plus: bool, minus: bool) -> Status {
    match (plus, minus) {
        (true, _) => Status::Proved,
        (false, true) => Status::Disproved,
        (false, false) => Status::Undetermined,
    }
}

pub struct Evaluator {
    facts: HashSet<Lit>,
    rules: Vec<OracleRule>,
    by_head: HashMap<Lit, Vec<usize>>,
    sup: HashSet<(String, String)>,
    delta: RefCell<HashMap<Lit, (bool, bool)>>,
    partial: RefCell<HashMap<Lit, (bool, bool)>>,
}

const CONV: &str = "conversion of ";

impl Evaluator {
    pub fn new(t: &Theory) -> Self {
        let facts: HashSet<Lit> = t.facts.iter().map(Lit::from_core).collect();
        let mut rules: Vec<OracleRule> = t
            .rules
            .iter()
            .map(|r| OracleRule {
                label: r.label.clone(),
                kind: match r.kind {
                    RuleKind::Strict => Kind::Strict,
                    RuleKind::Defeasible => Kind::Defeasible,
                    RuleKind::Defeater => Kind::Defeater,
                },
                body: r.body.iter().map(Lit::from_core).collect(),
                head: Lit::from_core(&r.head),
            })
            .collect();
        let mut sup: HashSet<(String, String)> = t.superiority.iter().cloned().collect();
        if t.modal_conversion {
            let mut obligations: BTreeSet<Lit> = facts
                .iter()
                .filter(|l| l.mode == Mode::Obl)
                .cloned()
                .collect();
            obligations.extend(
                rules
                    .iter()
                    .map(|r| r.head.clone())
                    .filter(|l| l.mode == Mode::Obl),
            );
            for ob in &obligations {
                rules.push(OracleRule {
                    label: format!("{CONV}{ob:?}"),
                    kind: Kind::Strict,
                    body: vec![ob.clone()],
                    head: Lit {
                        mode: Mode::Perm,
                        ..ob.clone()
                    },
                });
            }
            let heads: HashMap<&str, &Lit> =
                rules.iter().map(|r| (r.label.as_str(), &r.head)).collect();
            let inherited: Vec<(String, String)> = t
                .superiority
                .iter()
                .filter_map(|(w, l)| {
                    let h = heads.get(w.as_str())?;
                    (h.mode == Mode::Obl).then(|| (format!("{CONV}{h:?}"), l.clone()))
                })
                .collect();
            sup.extend(inherited);
        }
        let mut by_head: HashMap<Lit, Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            by_head.entry(r.head.clone()).or_default().push(i);
        }
        Self {
            facts,
            rules,
            by_head,
            sup,
            delta: RefCell::default(),
            partial: RefCell::default(),
        }
    }

    fn with_head(&self, l: &Lit) -> impl Iterator<Item = &OracleRule> {
        self.by_head
            .get(l)
            .into_iter()
            .flatten()
            .map(|&i| &self.rules[i])
    }

    fn plus_delta(&self, q: &Lit) -> bool {
        self.delta_pair(q).0
    }

    fn minus_delta(&self, q: &Lit) -> bool {
        self.delta_pair(q).1
    }

    fn delta_pair(&self, q: &Lit) -> (bool, bool) {
        if let Some(&v) = self.delta.borrow().get(q) {
            return v;
        }
        let strict: Vec<&OracleRule> = self
            .with_head(q)
            .filter(|r| r.kind == Kind::Strict)
            .collect();
        let plus = self.facts.contains(q)
            || strict
                .iter()
                .any(|r| r.body.iter().all(|b| self.plus_delta(b)));
        let minus = !self.facts.contains(q)
            && strict
                .iter()
                .all(|r| r.body.iter().any(|b| self.minus_delta(b)));
        self.delta.borrow_mut().insert(q.clone(), (plus, minus));
        (plus, minus)
    }

    fn plus_partial(&self, q: &Lit) -> bool {
        self.partial_pair(q).0
    }

    fn minus_partial(&self, q: &Lit) -> bool {
        self.partial_pair(q).1
    }

    fn applicable(&self, r: &OracleRule) -> bool {
        r.body.iter().all(|b| self.plus_partial(b))
    }

    fn discarded(&self, r: &OracleRule) -> bool {
        r.body.iter().any(|b| self.minus_partial(b))
    }

    fn beats(&self, t: &OracleRule, s: &OracleRule) -> bool {
        self.sup.contains(&(t.label.clone(), s.label.clone()))
    }

    fn partial_pair(&self, q: &Lit) -> (bool, bool) {
        if let Some(&v) = self.partial.borrow().get(q) {
            return v;
        }
        let conflicts = q.attackers();
        let supporters: Vec<&OracleRule> = self
            .with_head(q)
            .filter(|r| r.kind != Kind::Defeater)
            .collect();
        let attackers: Vec<&OracleRule> =
            conflicts.iter().flat_map(|c| self.with_head(c)).collect();

        let plus = self.plus_delta(q)
            || (conflicts.iter().all(|c| self.minus_delta(c))
                && supporters.iter().any(|r| self.applicable(r))
                && attackers.iter().all(|s| {
                    self.discarded(s)
                        || supporters
                            .iter()
                            .any(|t| self.beats(t, s) && self.applicable(t))
                }));
        let minus = self.minus_delta(q)
            && (conflicts.iter().any(|c| self.plus_delta(c))
                || supporters.iter().all(|r| self.discarded(r))
                || attackers.iter().any(|s| {
                    self.applicable(s)
                        && supporters
                            .iter()
                            .all(|t| !self.beats(t, s) || self.discarded(t))
                }));
        self.partial.borrow_mut().insert(q.clone(), (plus, minus));
        (plus, minus)
    }

    pub fn conditions(&self, lit: &ModalLiteral) -> Conditions {
        let q = Lit::from_core(lit);
        let (plus_delta, minus_delta) = self.delta_pair(&q);
        let (plus_partial, minus_partial) = self.partial_pair(&q);
        Conditions {
            plus_delta,
            minus_delta,
            plus_partial,
            minus_partial,
        }
    }

    /// Literals in the facts, rules (including conversion rules) and their
    /// conflict sets.
    fn universe(&self) -> BTreeSet<Lit> {
        let mut out: BTreeSet<Lit> = self.facts.iter().cloned().collect();
        for r in &self.rules {
            out.extend(r.body.iter().cloned());
            out.insert(r.head.clone());
        }
        let attacked: Vec<Lit> = out.iter().flat_map(Lit::attackers).collect();
        out.extend(attacked);
        out
    }

    /// True iff no proof condition depends, directly or not, on itself.
    pub fn is_acyclic(&self) -> bool {
        #[derive(Clone, Copy, PartialEq, Eq, Hash)]
        enum Strength {
            Delta,
            Partial,
        }
        let edges = |(q, s): &(Lit, Strength)| -> Vec<(Lit, Strength)> {
            match s {
                Strength::Delta => self
                    .with_head(q)
                    .filter(|r| r.kind == Kind::Strict)
                    .flat_map(|r| r.body.iter().map(|b| (b.clone(), Strength::Delta)))
                    .collect(),
                Strength::Partial => {
                    let conflicts = q.attackers();
                    let mut out: Vec<(Lit, Strength)> = vec![(q.clone(), Strength::Delta)];
                    out.extend(conflicts.iter().map(|c| (c.clone(), Strength::Delta)));
                    let rules = self
                        .with_head(q)
                        .filter(|r| r.kind != Kind::Defeater)
                        .chain(conflicts.iter().flat_map(|c| self.with_head(c)));
                    out.extend(
                        rules.flat_map(|r| r.body.iter().map(|b| (b.clone(), Strength::Partial))),
                    );
                    out
                }
            }
        };
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        let mut marks: HashMap<(Lit, Strength), Mark> = HashMap::new();
        for q in self.universe() {
            for s in [Strength::Delta, Strength::Partial] {
                let root = (q.clone(), s);
                if marks.contains_key(&root) {
                    continue;
                }
                // Iterative depth-first search; a back edge to an open node is a cycle.
                let mut stack = vec![(root.clone(), edges(&root), 0usize)];
                marks.insert(root, Mark::Open);
                while let Some((node, succ, i)) = stack.last_mut() {
                    if *i == succ.len() {
                        marks.insert(node.clone(), Mark::Done);
                        stack.pop();
                        continue;
                    }
                    let next = succ[*i].clone();
                    *i += 1;
                    match marks.get(&next) {
                        Some(Mark::Open) => return false,
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(next.clone(), Mark::Open);
                            let e = edges(&next);
                            stack.push((next, e, 0));
                        }
                    }
                }
            }
        }
        true
    }
}

/// Size limits for [`random_theory`].
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub atoms: usize,
    pub rules: usize,
    pub superiority: usize,
    pub facts: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            atoms: 8,
            rules: 15,
            superiority: 5,
            facts: 3,
        }
    }
}

/// Every literal over the first `atoms` propositional atoms `a0, a1, ...`.
pub fn literal_universe(atoms: usize) -> Vec<ModalLiteral> {
    let mut out = Vec::new();
    for i in 0..atoms {
        for negated in [false, true] {
            for m in [Modality::Fact, Modality::Obl, Modality::Perm] {
                let atom = Atom::new(format!("a{i}"), Vec::new());
                let literal = if negated {
                    Literal::neg(atom)
                } else {
                    Literal::pos(atom)
                };
                out.push(ModalLiteral::new(m, literal));
            }
        }
    }
    out
}

fn random_literal(rng: &mut impl Rng, atoms: usize, facts_only: bool) -> ModalLiteral {
    let atom = Atom::new(format!("a{}", rng.random_range(0..atoms)), Vec::new());
    let literal = if rng.random_bool(0.5) {
        Literal::neg(atom)
    } else {
        Literal::pos(atom)
    };
    let m = match rng.random_range(0..if facts_only { 10 } else { 4 }) {
        0 => Modality::Obl,
        1 => Modality::Perm,
        _ => Modality::Fact,
    };
    ModalLiteral::new(m, literal)
}

/// A random ground theory within `shape`. Superiority is acyclic: pairs
/// always point from a higher to a lower rank in a random rule ranking.
pub fn random_theory(rng: &mut impl Rng, shape: Shape) -> Theory {
    let atoms = rng.random_range(1..=shape.atoms.max(1));
    let mut t = Theory::new();
    t.modal_conversion = rng.random_bool(0.75);
    for _ in 0..rng.random_range(0..=shape.facts) {
        t.facts.insert(random_literal(rng, atoms, true));
    }
    let n = rng.random_range(0..=shape.rules);
    for i in 0..n {
        let body_len = [0, 1, 1, 2, 2, 3][rng.random_range(0..6)];
        let body = (0..body_len)
            .map(|_| random_literal(rng, atoms, false))
            .collect();
        let head = random_literal(rng, atoms, false);
        let label = format!("r{i}");
        let rule = match rng.random_range(0..20) {
            0..6 => Rule::strict(label, body, head),
            6..17 => Rule::defeasible(label, body, head),
            _ => Rule::defeater(label, body, head),
        };
        t.rules.push(rule);
    }
    if n >= 2 {
        let mut rank: Vec<usize> = (0..n).collect();
        rank.shuffle(rng);
        for _ in 0..rng.random_range(0..=shape.superiority) {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j {
                continue;
            }
            let (w, l) = if rank[i] > rank[j] { (i, j) } else { (j, i) };
            t.superiority.insert((format!("r{w}"), format!("r{l}")));
        }
    }
    t
}

/// `count` random theories from `seed` that pass [`Evaluator::is_acyclic`].
pub fn acyclic_corpus(seed: u64, count: usize, shape: Shape) -> Vec<Theory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = random_theory(&mut rng, shape);
        if Evaluator::new(&t).is_acyclic() {
            out.push(t);
        }
    }
    out
}

/// First disagreement between `conclusions` and the evaluator on the
/// literals over `atoms` atoms.
pub fn first_disagreement(
    t: &Theory,
    conclusions: &tdu_core::dl::ConclusionSet,
    atoms: usize,
) -> Option<String> {
    let ev = Evaluator::new(t);
    literal_universe(atoms).into_iter().find_map(|l| {
        let want = ev.conditions(&l);
        let got = conclusions.get(&l);
        (got.delta != want.delta() || got.partial != want.partial()).then(|| {
            format!(
                "{l}: engine {} vs oracle {:?}/{:?}",
                got.tags(),
                want.delta(),
                want.partial()
            )
        })
    })
}
