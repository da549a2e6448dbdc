use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::subsequence;
use tdu_core::compiler::{compile_policy, merge_theories, theory_to_text};
use tdu_core::dl::*;
use tdu_core::enforcement::actor_fact;
use tdu_core::scenario;
use tdu_core::tduo::*;

const SUBJECT: &str = "c";

fn granted<G: Granularity>(
    policy: &UsagePolicy,
    class: ActorClass,
    pick: fn(&Condition) -> &BTreeSet<G>,
) -> Vec<G> {
    policy
        .rules
        .iter()
        .filter(|r| r.operator == DeonticOperator::Permission)
        .flat_map(|r| &r.conditions)
        .filter(|c| {
            c.actor.is_empty() && class == ActorClass::DataOwner || c.actor.contains(&class)
        })
        .flat_map(|c| pick(c).iter().copied())
        .collect()
}

fn perm(dim: Dimension, level: &str) -> ModalLiteral {
    ModalLiteral::perm(Literal::pos(Atom::ground(
        dim.predicate(),
        [SUBJECT, level],
    )))
}

fn conclusions_for(policy: &UsagePolicy, class: ActorClass) -> ConclusionSet {
    let mut t = compile_policy(policy, "DO").unwrap();
    t.facts.insert(actor_fact(SUBJECT, class));
    compute_conclusions(&ground_theory(&t).unwrap())
}

/// Perm Scope(c, L) is +∂ exactly when some granted level covers L.
fn check_dimension<G: Granularity>(c: &ConclusionSet, grants: &[G]) -> Result<(), String> {
    for &l in G::all() {
        let expected = grants.iter().any(|g| g.subsumes(l));
        let got = c.get(&perm(G::DIMENSION, l.constant())).partial == Status::Proved;
        if expected != got {
            return Err(format!(
                "{:?} {l:?}: expected {expected}, got {got}",
                G::DIMENSION
            ));
        }
    }
    Ok(())
}

fn check_exact(policy: &UsagePolicy, class: ActorClass) -> Result<(), String> {
    let c = conclusions_for(policy, class);
    check_dimension(&c, &granted(policy, class, |c| &c.temporality))?;
    check_dimension(&c, &granted(policy, class, |c| &c.spatiality))?;
    check_dimension(&c, &granted(policy, class, |c| &c.abstraction))?;
    Ok(())
}

#[test]
fn scenario_policies_grant_exactly_their_expanded_levels() {
    for policy in scenario::policies() {
        for (_, class) in scenario::SUBJECTS {
            check_exact(&policy, class).unwrap_or_else(|e| panic!("{}: {e}", policy.name));
        }
    }
}

/// Grants one level at a time and checks every level of the dimension
/// against the subsumption table.
fn grant_each_level<G: Granularity>(set: fn(&mut Condition, G), value: fn(G) -> ScopeValue) {
    for &l in G::all() {
        let mut cond = Condition::default();
        set(&mut cond, l);
        let policy = UsagePolicy {
            name: "p".into(),
            rules: vec![PolicyRule {
                operator: DeonticOperator::Permission,
                conditions: vec![cond],
            }],
        };
        let c = conclusions_for(&policy, ActorClass::DataOwner);
        for &other in G::all() {
            let covered = subsumes(value(l), value(other), G::DIMENSION).unwrap();
            let got = c.get(&perm(G::DIMENSION, other.constant())).partial == Status::Proved;
            assert_eq!(got, covered, "{l:?} -> {other:?}");
        }
    }
}

#[test]
fn every_single_grant_expands_to_the_levels_it_covers() {
    grant_each_level(
        |c, l| {
            c.temporality.insert(l);
        },
        ScopeValue::Temporal,
    );
    grant_each_level(
        |c, l| {
            c.spatiality.insert(l);
        },
        ScopeValue::Spatial,
    );
    grant_each_level(
        |c, l| {
            c.abstraction.insert(l);
        },
        ScopeValue::Abstraction,
    );
    grant_each_level(
        |c, l| {
            c.purpose.insert(l);
        },
        ScopeValue::Purpose,
    );
}

fn levels<G: Granularity>() -> impl Strategy<Value = BTreeSet<G>> {
    subsequence(G::all().to_vec(), 0..=G::all().len()).prop_map(|v| v.into_iter().collect())
}

fn actors() -> impl Strategy<Value = BTreeSet<ActorClass>> {
    subsequence(
        vec![
            ActorClass::DataOwner,
            ActorClass::MunicipalAuthority,
            ActorClass::CommercialOperator,
        ],
        0..=3,
    )
    .prop_map(|v| v.into_iter().collect())
}

fn condition() -> impl Strategy<Value = Condition> {
    (levels(), levels(), levels(), actors())
        .prop_map(|(temporality, spatiality, abstraction, actor)| Condition {
            temporality,
            spatiality,
            abstraction,
            actor,
            purpose: BTreeSet::new(),
        })
        .prop_filter("at least one scope", |c| !c.is_empty())
}

fn policy_with(ops: Vec<DeonticOperator>) -> impl Strategy<Value = UsagePolicy> {
    let rule = (
        prop::sample::select(ops),
        prop::collection::vec(condition(), 1..3),
    )
        .prop_map(|(operator, conditions)| PolicyRule {
            operator,
            conditions,
        });
    ("[a-z]{1,6}", prop::collection::vec(rule, 0..4))
        .prop_map(|(name, rules)| UsagePolicy { name, rules })
}

fn policy() -> impl Strategy<Value = UsagePolicy> {
    policy_with(DeonticOperator::ALL.to_vec())
}

fn class() -> impl Strategy<Value = ActorClass> {
    prop::sample::select(vec![
        ActorClass::DataOwner,
        ActorClass::MunicipalAuthority,
        ActorClass::CommercialOperator,
    ])
}

fn with_facts(mut t: Theory) -> Theory {
    t.facts.extend(scenario::facts());
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compilation_is_deterministic(p in policy()) {
        let a = theory_to_text(&compile_policy(&p, "DO").unwrap());
        let b = theory_to_text(&compile_policy(&p.clone(), "DO").unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn permissions_grant_exactly_their_expansions(
        p in policy_with(vec![DeonticOperator::Permission]),
        c in class(),
    ) {
        prop_assert_eq!(check_exact(&p, c), Ok(()));
    }

    #[test]
    fn merge_is_associative(a in policy(), b in policy(), c in policy()) {
        let [ta, tb, tc] = [a, b, c].map(|p| compile_policy(&p, "DO").unwrap());
        let left = merge_theories(&[merge_theories(&[ta.clone(), tb.clone()]), tc.clone()]);
        let right = merge_theories(&[ta, merge_theories(&[tb, tc])]);
        let cl = compute_conclusions(&ground_theory(&with_facts(left)).unwrap());
        let cr = compute_conclusions(&ground_theory(&with_facts(right)).unwrap());
        prop_assert_eq!(cl, cr);
    }
}
