//! Ground modal defeasible logic.
//!
//! A [`Theory`] holds facts, labelled rules (strict, defeasible, defeater)
//! over modal literals (`Fact`, `[O]`, `[P]`) and a superiority relation.
//! [`ground_theory`] instantiates variables over the active domain and
//! [`compute_conclusions`] assigns the four proof tags +Δ, −Δ, +∂, −∂ by
//! least-fixpoint iteration.

mod coherence;
mod conflict;
mod ground;
mod reason;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coherence::{is_coherent, CoherenceReport, Incoherence};
pub use conflict::{conflict_set, conflicts_with};
pub use ground::{active_domain, ground_labels, ground_theory, Grounder};
pub use reason::{
    compute_conclusions, explain_literal, explain_literals, query, LiteralExplanation, RuleStatus,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DlError {
    #[error("rule `{0}` is unsafe: a head variable does not occur in its body")]
    UnsafeRule(String),
    #[error("duplicate rule label `{0}`")]
    DuplicateLabel(String),
    #[error("superiority references unknown rule `{0}`")]
    UnknownLabel(String),
    #[error("superiority pair `{0} > {0}` is reflexive")]
    ReflexiveSuperiority(String),
    #[error("fact `{0}` is not ground")]
    NonGroundFact(String),
    #[error("rule `{label}` has mode {mode:?} but head `{head}`")]
    ModeMismatch {
        label: String,
        mode: Modality,
        head: String,
    },
    #[error("predicate `{predicate}` used with arity {found}, expected {expected}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("empty predicate name")]
    EmptyPredicate,
}

/// A term is a constant or a variable. In the textual language variables
/// start with an uppercase letter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Term {
    Const(String),
    Var(String),
}

impl Term {
    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

/// Constants that would read as variables (or are not plain identifiers)
/// are quoted.
pub(crate) fn is_bare_constant(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) if is_bare_constant(c) => f.write_str(c),
            Term::Const(c) => {
                f.write_str("\"")?;
                for ch in c.chars() {
                    match ch {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        _ => write!(f, "{ch}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Self {
            predicate: predicate.into(),
            args,
        }
    }

    /// Atom whose arguments are all constants.
    pub fn ground<I, S>(predicate: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(
            predicate,
            args.into_iter().map(|a| Term::Const(a.into())).collect(),
        )
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(Term::is_var)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Self {
            atom,
            negated: false,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Self {
            atom,
            negated: true,
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            atom: self.atom.clone(),
            negated: !self.negated,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("~")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// `Fact` marks an unmoded (constitutive) literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modality {
    Fact,
    Obl,
    Perm,
}

impl Modality {
    fn prefix(self) -> &'static str {
        match self {
            Modality::Fact => "",
            Modality::Obl => "[O]",
            Modality::Perm => "[P]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModalLiteral {
    pub modality: Modality,
    pub literal: Literal,
}

impl ModalLiteral {
    pub fn new(modality: Modality, literal: Literal) -> Self {
        Self { modality, literal }
    }

    pub fn fact(literal: Literal) -> Self {
        Self::new(Modality::Fact, literal)
    }

    pub fn obl(literal: Literal) -> Self {
        Self::new(Modality::Obl, literal)
    }

    pub fn perm(literal: Literal) -> Self {
        Self::new(Modality::Perm, literal)
    }

    pub fn is_ground(&self) -> bool {
        self.literal.atom.is_ground()
    }
}

impl fmt::Display for ModalLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.modality.prefix(), self.literal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    Strict,
    Defeasible,
    Defeater,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub label: String,
    pub kind: RuleKind,
    pub mode: Modality,
    pub body: Vec<ModalLiteral>,
    pub head: ModalLiteral,
}

impl Rule {
    /// Builds a rule whose mode is taken from the head's modality.
    pub fn new(
        label: impl Into<String>,
        kind: RuleKind,
        body: Vec<ModalLiteral>,
        head: ModalLiteral,
    ) -> Self {
        Self {
            label: label.into(),
            kind,
            mode: head.modality,
            body,
            head,
        }
    }

    pub fn strict(label: impl Into<String>, body: Vec<ModalLiteral>, head: ModalLiteral) -> Self {
        Self::new(label, RuleKind::Strict, body, head)
    }

    pub fn defeasible(
        label: impl Into<String>,
        body: Vec<ModalLiteral>,
        head: ModalLiteral,
    ) -> Self {
        Self::new(label, RuleKind::Defeasible, body, head)
    }

    pub fn defeater(label: impl Into<String>, body: Vec<ModalLiteral>, head: ModalLiteral) -> Self {
        Self::new(label, RuleKind::Defeater, body, head)
    }

    pub fn is_ground(&self) -> bool {
        self.head.is_ground() && self.body.iter().all(ModalLiteral::is_ground)
    }

    /// Strict and defeasible rules can support their head; defeaters only block.
    pub fn supports(&self) -> bool {
        self.kind != RuleKind::Defeater
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.label)?;
        for (i, b) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            write!(f, "{b}")?;
        }
        let arrow = match self.kind {
            RuleKind::Strict => "->",
            RuleKind::Defeasible => "=>",
            RuleKind::Defeater => "~>",
        };
        let suffix = match self.mode {
            Modality::Fact => "",
            Modality::Obl => "o",
            Modality::Perm => "p",
        };
        write!(f, " {arrow}{suffix} {}.", self.head.literal)
    }
}

/// Facts, rules and a superiority relation `(winner, loser)` over rule labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Theory {
    pub facts: BTreeSet<ModalLiteral>,
    pub rules: Vec<Rule>,
    pub superiority: BTreeSet<(String, String)>,
    /// When set, every obligation `[O]p` also yields `[P]p`.
    pub modal_conversion: bool,
}

impl Default for Theory {
    fn default() -> Self {
        Self {
            facts: BTreeSet::new(),
            rules: Vec::new(),
            superiority: BTreeSet::new(),
            modal_conversion: true,
        }
    }
}

impl Theory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fact(mut self, fact: ModalLiteral) -> Self {
        self.facts.insert(fact);
        self
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn with_superiority(mut self, winner: impl Into<String>, loser: impl Into<String>) -> Self {
        self.superiority.insert((winner.into(), loser.into()));
        self
    }

    pub fn rule(&self, label: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.label == label)
    }

    pub fn is_ground(&self) -> bool {
        self.rules.iter().all(Rule::is_ground) && self.facts.iter().all(ModalLiteral::is_ground)
    }

    /// Checks the structural invariants: unique labels, irreflexive
    /// superiority over existing rules, ground facts, head modality equal to
    /// the rule mode, non-empty predicates, and one arity per predicate.
    pub fn validate(&self) -> Result<(), DlError> {
        let mut labels = BTreeSet::new();
        for r in &self.rules {
            if !labels.insert(r.label.as_str()) {
                return Err(DlError::DuplicateLabel(r.label.clone()));
            }
            if r.head.modality != r.mode {
                return Err(DlError::ModeMismatch {
                    label: r.label.clone(),
                    mode: r.mode,
                    head: r.head.to_string(),
                });
            }
        }
        for (w, l) in &self.superiority {
            if w == l {
                return Err(DlError::ReflexiveSuperiority(w.clone()));
            }
            for x in [w, l] {
                if !labels.contains(x.as_str()) {
                    return Err(DlError::UnknownLabel(x.clone()));
                }
            }
        }
        if let Some(f) = self.facts.iter().find(|f| !f.is_ground()) {
            return Err(DlError::NonGroundFact(f.to_string()));
        }
        let mut arity: BTreeMap<&str, usize> = BTreeMap::new();
        let atoms = self.facts.iter().chain(
            self.rules
                .iter()
                .flat_map(|r| r.body.iter().chain(std::iter::once(&r.head))),
        );
        for ml in atoms {
            let atom = &ml.literal.atom;
            if atom.predicate.is_empty() {
                return Err(DlError::EmptyPredicate);
            }
            let expected = *arity.entry(&atom.predicate).or_insert(atom.args.len());
            if expected != atom.args.len() {
                return Err(DlError::ArityMismatch {
                    predicate: atom.predicate.clone(),
                    expected,
                    found: atom.args.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strength {
    Delta,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProofTag {
    pub polarity: Polarity,
    pub strength: Strength,
}

impl ProofTag {
    pub const PLUS_DELTA: ProofTag = ProofTag {
        polarity: Polarity::Plus,
        strength: Strength::Delta,
    };
    pub const MINUS_DELTA: ProofTag = ProofTag {
        polarity: Polarity::Minus,
        strength: Strength::Delta,
    };
    pub const PLUS_PARTIAL: ProofTag = ProofTag {
        polarity: Polarity::Plus,
        strength: Strength::Partial,
    };
    pub const MINUS_PARTIAL: ProofTag = ProofTag {
        polarity: Polarity::Minus,
        strength: Strength::Partial,
    };
}

impl fmt::Display for ProofTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.polarity {
            Polarity::Plus => '+',
            Polarity::Minus => '-',
        };
        let sym = match self.strength {
            Strength::Delta => "Δ",
            Strength::Partial => "∂",
        };
        write!(f, "{sign}{sym}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Proved,
    Disproved,
    Undetermined,
}

/// Status of one literal at both strengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conclusion {
    pub delta: Status,
    pub partial: Status,
}

impl Conclusion {
    /// What an absent literal gets: no facts and no rules, so it fails at
    /// both strengths.
    pub const REFUTED: Conclusion = Conclusion {
        delta: Status::Disproved,
        partial: Status::Disproved,
    };

    pub fn at(&self, strength: Strength) -> Status {
        match strength {
            Strength::Delta => self.delta,
            Strength::Partial => self.partial,
        }
    }

    /// Compact tag rendering, e.g. `-Δ -∂` or `+Δ +∂`; `?` marks undetermined.
    pub fn tags(&self) -> String {
        let one = |s: Status, sym: &str| match s {
            Status::Proved => format!("+{sym}"),
            Status::Disproved => format!("-{sym}"),
            Status::Undetermined => format!("?{sym}"),
        };
        format!("{} {}", one(self.delta, "Δ"), one(self.partial, "∂"))
    }
}

/// Proof-tag assignment for every literal mentioned by a theory.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConclusionSet {
    entries: BTreeMap<ModalLiteral, Conclusion>,
}

impl ConclusionSet {
    pub(crate) fn from_entries(entries: BTreeMap<ModalLiteral, Conclusion>) -> Self {
        Self { entries }
    }

    pub fn get(&self, lit: &ModalLiteral) -> Conclusion {
        self.entries
            .get(lit)
            .copied()
            .unwrap_or(Conclusion::REFUTED)
    }

    pub fn contains(&self, lit: &ModalLiteral) -> bool {
        self.entries.contains_key(lit)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModalLiteral, &Conclusion)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
