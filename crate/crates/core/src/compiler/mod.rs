//! Translation of usage policies and rule text into defeasible theories.
//!
//! A permission over scope level `L` becomes `actor(X) =>p Scope(X, L)`.
//! Because a grant at a fine level also covers every coarser level, each
//! permission head is followed by strict rules
//! `[P]Scope(X, L) ->p Scope(X, L')` for all coarser `L'` (all levels when
//! `L` is `any`). Prohibitions compile to `=>o ~Scope(X, L)` and propagate
//! downwards to finer levels in the same way.

mod dsl;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dl::{conflict_set, Atom, DlError, Literal, ModalLiteral, Modality, Rule, Term, Theory};
use crate::tduo::{
    ActorClass, Condition, DeonticOperator, Dimension, Granularity, ModelError, UsagePolicy,
};

pub use dsl::{parse_literal, parse_rule, parse_theory, theory_to_text};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("duplicate rule label `{label}` at {line}:{col}")]
    DuplicateLabel {
        label: String,
        line: usize,
        col: usize,
    },
    #[error("unknown actor class `{0}`")]
    UnknownActorClass(String),
    #[error(transparent)]
    Invalid(#[from] DlError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The variable every compiled rule quantifies over.
pub const SUBJECT_VAR: &str = "X";

/// Rule-label stem derived from a policy name.
pub fn policy_slug(name: &str) -> String {
    let mut slug: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if slug.is_empty() {
        slug.push('p');
    }
    slug
}

/// `[mode]Scope(X, level)` for the subject variable.
pub fn scope_literal(
    dimension: Dimension,
    level: &str,
    modality: Modality,
    negated: bool,
) -> ModalLiteral {
    let atom = Atom::new(
        dimension.predicate(),
        vec![Term::var(SUBJECT_VAR), Term::constant(level)],
    );
    let lit = if negated {
        Literal::neg(atom)
    } else {
        Literal::pos(atom)
    };
    ModalLiteral::new(modality, lit)
}

fn actor_atom(class: ActorClass) -> ModalLiteral {
    ModalLiteral::fact(Literal::pos(Atom::new(
        class.predicate(),
        vec![Term::var(SUBJECT_VAR)],
    )))
}

/// `(dimension, level, coarser levels, finer levels)` for each scope value
/// named by a condition.
type ScopeEntry = (
    Dimension,
    &'static str,
    Vec<&'static str>,
    Vec<&'static str>,
);

fn entries<G: Granularity>(levels: &BTreeSet<G>, out: &mut Vec<ScopeEntry>) {
    let names = |v: Vec<G>| v.into_iter().map(G::constant).collect::<Vec<_>>();
    for &l in levels {
        let (up, down) = if l.is_any() {
            (names(G::levels()), names(G::levels()))
        } else {
            (names(l.coarser()), names(l.finer()))
        };
        out.push((G::DIMENSION, l.constant(), up, down));
    }
}

fn scope_entries(c: &Condition) -> Vec<ScopeEntry> {
    let mut out = Vec::new();
    entries(&c.temporality, &mut out);
    entries(&c.spatiality, &mut out);
    entries(&c.abstraction, &mut out);
    entries(&c.purpose, &mut out);
    out
}

/// Compiles `policy` into a theory. Conditions that do not name an actor
/// class apply to `fallback_actor` (a class predicate such as `MA`).
pub fn compile_policy(policy: &UsagePolicy, fallback_actor: &str) -> Result<Theory, CompileError> {
    policy.validate()?;
    let fallback = ActorClass::from_predicate(fallback_actor)
        .ok_or_else(|| CompileError::UnknownActorClass(fallback_actor.to_string()))?;
    let slug = policy_slug(&policy.name);
    let mut theory = Theory::new();
    let mut expansions: BTreeSet<(ModalLiteral, ModalLiteral)> = BTreeSet::new();
    let mut expansion_order: Vec<(ModalLiteral, ModalLiteral)> = Vec::new();

    for (i, rule) in policy.rules.iter().enumerate() {
        let mut k = 0;
        for cond in &rule.conditions {
            let actors: Vec<ActorClass> = if cond.actor.is_empty() {
                vec![fallback]
            } else {
                cond.actor.iter().copied().collect()
            };
            for actor in actors {
                for (dim, level, up, down) in scope_entries(cond) {
                    let (head, targets, negated) = match rule.operator {
                        DeonticOperator::Permission => {
                            (scope_literal(dim, level, Modality::Perm, false), up, false)
                        }
                        DeonticOperator::Obligation => (
                            scope_literal(dim, level, Modality::Obl, false),
                            Vec::new(),
                            false,
                        ),
                        DeonticOperator::Forbidden => {
                            (scope_literal(dim, level, Modality::Obl, true), down, true)
                        }
                    };
                    for target in targets {
                        let to = scope_literal(dim, target, head.modality, negated);
                        let pair = (head.clone(), to);
                        if expansions.insert(pair.clone()) {
                            expansion_order.push(pair);
                        }
                    }
                    theory.rules.push(Rule::defeasible(
                        format!("{slug}_r{i}_{k}"),
                        vec![actor_atom(actor)],
                        head,
                    ));
                    k += 1;
                }
            }
        }
    }
    for (n, (from, to)) in expansion_order.into_iter().enumerate() {
        theory
            .rules
            .push(Rule::strict(format!("{slug}_x{n}"), vec![from], to));
    }
    Ok(theory)
}

/// Unions theories. Labels used by more than one input are renamed to
/// `s{i}_{label}` in every input that uses them (with superiority pairs
/// rewritten); modal conversion stays on only if every input enables it.
pub fn merge_theories(theories: &[Theory]) -> Theory {
    let mut uses: HashMap<&str, usize> = HashMap::new();
    for t in theories {
        let labels: HashSet<&str> = t.rules.iter().map(|r| r.label.as_str()).collect();
        for l in labels {
            *uses.entry(l).or_default() += 1;
        }
    }
    let mut taken: HashSet<String> = uses.keys().map(|s| s.to_string()).collect();
    let mut merged = Theory::new();
    merged.modal_conversion = theories.iter().all(|t| t.modal_conversion);
    for (i, t) in theories.iter().enumerate() {
        let mut rename: HashMap<&str, String> = HashMap::new();
        for r in &t.rules {
            if uses[r.label.as_str()] > 1 {
                let mut fresh = format!("s{i}_{}", r.label);
                while taken.contains(&fresh) {
                    fresh = format!("s{i}_{fresh}");
                }
                taken.insert(fresh.clone());
                rename.insert(r.label.as_str(), fresh);
            }
        }
        let relabel = |l: &str| rename.get(l).cloned().unwrap_or_else(|| l.to_string());
        merged.facts.extend(t.facts.iter().cloned());
        for r in &t.rules {
            let mut r = r.clone();
            r.label = relabel(&r.label);
            merged.rules.push(r);
        }
        for (w, l) in &t.superiority {
            merged.superiority.insert((relabel(w), relabel(l)));
        }
    }
    merged
}

/// Two rules whose heads can clash and which superiority does not order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleConflict {
    pub first: String,
    pub second: String,
    pub first_head: String,
    pub second_head: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub conflicts: Vec<RuleConflict>,
}

impl ConflictReport {
    pub fn is_empty(&self) -> bool {
        self.conflicts.is_empty()
    }
}

/// Reports every pair of rules whose heads are in each other's conflict set
/// for some instantiation of their variables and which are unordered by
/// superiority. Pairs are listed in rule order.
pub fn detect_conflicts(t: &Theory) -> ConflictReport {
    let mut conflicts = Vec::new();
    for (i, a) in t.rules.iter().enumerate() {
        let rivals = conflict_set(&a.head);
        for b in &t.rules[i + 1..] {
            if !rivals.iter().any(|r| unifiable(r, &b.head)) {
                continue;
            }
            let ordered = t.superiority.contains(&(a.label.clone(), b.label.clone()))
                || t.superiority.contains(&(b.label.clone(), a.label.clone()));
            if !ordered {
                conflicts.push(RuleConflict {
                    first: a.label.clone(),
                    second: b.label.clone(),
                    first_head: a.head.to_string(),
                    second_head: b.head.to_string(),
                });
            }
        }
    }
    ConflictReport { conflicts }
}

/// Whether two literals (with disjoint variable scopes) have a common
/// instance.
fn unifiable(a: &ModalLiteral, b: &ModalLiteral) -> bool {
    if a.modality != b.modality
        || a.literal.negated != b.literal.negated
        || a.literal.atom.predicate != b.literal.atom.predicate
        || a.literal.atom.args.len() != b.literal.atom.args.len()
    {
        return false;
    }
    // Rename apart: variables of the two sides live in separate namespaces.
    let side = |prefix: char, t: &Term| match t {
        Term::Var(v) => Term::Var(format!("{prefix}:{v}")),
        c => c.clone(),
    };
    let mut subst: HashMap<String, Term> = HashMap::new();
    let resolve = |subst: &HashMap<String, Term>, mut t: Term| {
        while let Term::Var(v) = &t {
            match subst.get(v) {
                Some(next) => t = next.clone(),
                None => break,
            }
        }
        t
    };
    for (x, y) in a.literal.atom.args.iter().zip(&b.literal.atom.args) {
        let x = resolve(&subst, side('l', x));
        let y = resolve(&subst, side('r', y));
        match (x, y) {
            (Term::Const(c), Term::Const(d)) if c != d => return false,
            (Term::Const(_), Term::Const(_)) => {}
            (Term::Var(v), other) | (other, Term::Var(v)) => {
                if other != Term::Var(v.clone()) {
                    subst.insert(v, other);
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::{compute_conclusions, ground_theory, Status};
    use crate::tduo::{AbstractionLevel, PolicyRule, SpatialLevel, TemporalLevel};

    fn permission(name: &str, c: Condition) -> UsagePolicy {
        UsagePolicy {
            name: name.into(),
            rules: vec![PolicyRule {
                operator: DeonticOperator::Permission,
                conditions: vec![c],
            }],
        }
    }

    fn ma() -> UsagePolicy {
        permission(
            "urn:tdu:policy:ma",
            Condition {
                temporality: [TemporalLevel::Hourly].into(),
                spatiality: [SpatialLevel::Street].into(),
                abstraction: [AbstractionLevel::Aggregation].into(),
                actor: [ActorClass::MunicipalAuthority].into(),
                ..Condition::default()
            },
        )
    }

    fn heads(t: &Theory, kind: crate::dl::RuleKind) -> Vec<String> {
        t.rules
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| {
                format!(
                    "{} {}",
                    r.body
                        .iter()
                        .map(|b| b.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    r.head
                )
            })
            .collect()
    }

    #[test]
    fn municipal_policy_compiles_to_three_permissions() {
        let t = compile_policy(&ma(), "MA").unwrap();
        let defeasible = heads(&t, crate::dl::RuleKind::Defeasible);
        assert_eq!(
            defeasible,
            vec![
                "MA(X) [P]TemporalScope(X, hourly)",
                "MA(X) [P]SpatialScope(X, street)",
                "MA(X) [P]AbstractScope(X, aggregation)",
            ]
        );
        let strict = heads(&t, crate::dl::RuleKind::Strict);
        assert_eq!(
            strict,
            vec![
                "[P]TemporalScope(X, hourly) [P]TemporalScope(X, daily)",
                "[P]TemporalScope(X, hourly) [P]TemporalScope(X, weekly)",
                "[P]TemporalScope(X, hourly) [P]TemporalScope(X, monthly)",
                "[P]TemporalScope(X, hourly) [P]TemporalScope(X, yearly)",
                "[P]SpatialScope(X, street) [P]SpatialScope(X, zone)",
                "[P]AbstractScope(X, aggregation) [P]AbstractScope(X, statistic)",
            ]
        );
        assert_eq!(t.rules[0].label, "urn_tdu_policy_ma_r0_0");
    }

    #[test]
    fn fallback_actor_applies_without_actor_scope() {
        let p = permission(
            "owner",
            Condition {
                spatiality: [SpatialLevel::Any].into(),
                ..Condition::default()
            },
        );
        let t = compile_policy(&p, "DO").unwrap();
        assert_eq!(
            t.rules[0].to_string(),
            "owner_r0_0: DO(X) =>p SpatialScope(X, any)."
        );
        let targets: Vec<String> = t.rules[1..].iter().map(|r| r.head.to_string()).collect();
        assert_eq!(
            targets,
            ["[P]SpatialScope(X, street)", "[P]SpatialScope(X, zone)"]
        );
        assert_eq!(
            compile_policy(&p, "XX"),
            Err(CompileError::UnknownActorClass("XX".into()))
        );
    }

    #[test]
    fn empty_policy_is_empty_theory() {
        let p = UsagePolicy {
            name: "urn:x".into(),
            rules: vec![],
        };
        assert!(compile_policy(&p, "DO").unwrap().rules.is_empty());
    }

    #[test]
    fn forbidden_is_negated_obligation_spreading_down() {
        let p = UsagePolicy {
            name: "f".into(),
            rules: vec![PolicyRule {
                operator: DeonticOperator::Forbidden,
                conditions: vec![Condition {
                    temporality: [TemporalLevel::Minutely].into(),
                    ..Condition::default()
                }],
            }],
        };
        let t = compile_policy(&p, "CO").unwrap();
        assert_eq!(
            t.rules[0].to_string(),
            "f_r0_0: CO(X) =>o ~TemporalScope(X, minutely)."
        );
        assert_eq!(
            t.rules[1].to_string(),
            "f_x0: [O]~TemporalScope(X, minutely) ->o ~TemporalScope(X, secondly)."
        );
        assert_eq!(t.rules.len(), 2);
    }

    #[test]
    fn compilation_is_deterministic() {
        let a = theory_to_text(&compile_policy(&ma(), "MA").unwrap());
        let b = theory_to_text(&compile_policy(&ma(), "MA").unwrap());
        assert_eq!(a, b);
        assert_eq!(
            parse_theory(&a).unwrap(),
            compile_policy(&ma(), "MA").unwrap()
        );
    }

    #[test]
    fn merging_prefixes_clashing_labels() {
        let a = parse_theory("r1: => p.\nr2: => ~p.\nr1 > r2.").unwrap();
        let b = parse_theory("r1: => q.").unwrap();
        let m = merge_theories(&[a.clone(), b.clone()]);
        let labels: Vec<&str> = m.rules.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["s0_r1", "r2", "s1_r1"]);
        assert_eq!(
            m.superiority,
            [("s0_r1".to_string(), "r2".to_string())].into()
        );
        m.validate().unwrap();
        let before_a = compute_conclusions(&a);
        let after = compute_conclusions(&m);
        for (lit, c) in before_a.iter() {
            assert_eq!(after.get(lit), *c, "{lit}");
        }
        assert_eq!(merge_theories(std::slice::from_ref(&a)), a);
    }

    #[test]
    fn conflicts_are_reported_until_ordered() {
        let t = parse_theory("r1: =>o p.\nr2: =>p ~p.").unwrap();
        let report = detect_conflicts(&t);
        assert_eq!(report.conflicts.len(), 1);
        assert_eq!(
            (
                report.conflicts[0].first.as_str(),
                report.conflicts[0].second.as_str()
            ),
            ("r1", "r2")
        );
        let t = t.with_superiority("r1", "r2");
        assert!(detect_conflicts(&t).is_empty());
    }

    #[test]
    fn conflicts_through_variables() {
        let t = parse_theory(
            "a: MA(X) =>p S(X, street).\nb: CO(Y) =>o ~S(Y, street).\nc: CO(Y) =>o ~S(Y, zone).\nd: =>o ~S(city, Z).",
        )
        .unwrap();
        let pairs: Vec<(String, String)> = detect_conflicts(&t)
            .conflicts
            .into_iter()
            .map(|c| (c.first, c.second))
            .collect();
        assert_eq!(
            pairs,
            [("a".to_string(), "b".to_string()), ("a".into(), "d".into())]
        );
    }

    #[test]
    fn unification_respects_shared_variables() {
        let a = ModalLiteral::fact(Literal::pos(Atom::new(
            "p",
            vec![Term::var("X"), Term::var("X")],
        )));
        let b = ModalLiteral::fact(Literal::pos(Atom::new(
            "p",
            vec![Term::constant("a"), Term::constant("b")],
        )));
        let c = ModalLiteral::fact(Literal::pos(Atom::new(
            "p",
            vec![Term::var("Y"), Term::constant("b")],
        )));
        assert!(!unifiable(&a, &b));
        assert!(unifiable(&a, &c));
        assert!(unifiable(&c, &b));
    }

    #[test]
    fn municipal_theory_has_no_conflicts() {
        assert!(detect_conflicts(&compile_policy(&ma(), "MA").unwrap()).is_empty());
    }

    #[test]
    fn expansion_covers_coarser_levels_only() {
        let t = compile_policy(&ma(), "MA")
            .unwrap()
            .with_fact(ModalLiteral::fact(Literal::pos(Atom::ground("MA", ["m"]))));
        let c = compute_conclusions(&ground_theory(&t).unwrap());
        let perm = |dim: Dimension, level: &str| {
            let lit = scope_literal(dim, level, Modality::Perm, false);
            let ground = ModalLiteral::new(
                lit.modality,
                Literal::pos(Atom::ground(
                    lit.literal.atom.predicate.clone(),
                    ["m", level],
                )),
            );
            c.get(&ground).partial
        };
        for l in TemporalLevel::levels() {
            let expected = if TemporalLevel::Hourly.subsumes(l) {
                Status::Proved
            } else {
                Status::Disproved
            };
            assert_eq!(perm(Dimension::Temporal, l.constant()), expected, "{l}");
        }
        assert_eq!(perm(Dimension::Temporal, "any"), Status::Disproved);
        assert_eq!(perm(Dimension::Spatial, "zone"), Status::Proved);
        assert_eq!(perm(Dimension::Abstraction, "detail"), Status::Disproved);
    }
}
