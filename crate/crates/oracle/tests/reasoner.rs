use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tdu_core::dl::*;
use tdu_oracle::dl::*;

const ATOMS: usize = 8;

#[test]
fn engine_agrees_with_the_recursive_evaluator() {
    let corpus = acyclic_corpus(2024, 1000, Shape::default());
    for (i, t) in corpus.iter().enumerate() {
        let c = compute_conclusions(t);
        if let Some(diff) = first_disagreement(t, &c, ATOMS) {
            panic!(
                "theory {i}: {diff}\n{}",
                tdu_core::compiler::theory_to_text(t)
            );
        }
    }
}

#[test]
fn corpus_exercises_every_rule_kind_and_outcome() {
    let corpus = acyclic_corpus(2024, 1000, Shape::default());
    let rules = corpus.iter().flat_map(|t| &t.rules);
    let kinds: std::collections::HashSet<_> = rules.map(|r| r.kind).collect();
    assert_eq!(kinds.len(), 3);
    assert!(corpus.iter().any(|t| !t.superiority.is_empty()));
    assert!(
        corpus.iter().any(|t| t.modal_conversion) && corpus.iter().any(|t| !t.modal_conversion)
    );
    let mut partial = std::collections::HashSet::new();
    for t in &corpus {
        for (_, c) in compute_conclusions(t).iter() {
            partial.insert((c.delta, c.partial));
        }
    }
    for tags in [
        (Status::Proved, Status::Proved),
        (Status::Disproved, Status::Proved),
        (Status::Disproved, Status::Disproved),
    ] {
        assert!(partial.contains(&tags), "{tags:?} never occurs");
    }
}

/// Violations of tag exclusivity, Δ ⇒ ∂ and consistency in one theory.
fn coherence_violations(t: &Theory) -> Vec<String> {
    let mut out = Vec::new();
    let ev = Evaluator::new(t);
    let c = compute_conclusions(t);
    for l in literal_universe(ATOMS) {
        let k = ev.conditions(&l);
        if k.plus_delta && k.minus_delta || k.plus_partial && k.minus_partial {
            out.push(format!("{l}: both polarities hold"));
        }
        let got = c.get(&l);
        if got.delta == Status::Proved && got.partial != Status::Proved {
            out.push(format!("{l}: +Δ without +∂"));
        }
    }
    let report = is_coherent(&c);
    let strict_clash = report.violations.iter().any(|v| v.strict);
    if !strict_clash && !report.is_coherent() {
        out.extend(
            report
                .violations
                .iter()
                .map(|v| format!("{} and {} both +∂", v.left, v.right)),
        );
    }
    out
}

#[test]
fn corpus_is_coherent() {
    for (i, t) in acyclic_corpus(2024, 1000, Shape::default())
        .iter()
        .enumerate()
    {
        let v = coherence_violations(t);
        assert!(v.is_empty(), "theory {i}: {v:?}");
    }
}

fn theory() -> impl Strategy<Value = Theory> {
    any::<u64>()
        .prop_map(|seed| random_theory(&mut ChaCha8Rng::seed_from_u64(seed), Shape::default()))
}

fn delta_only(c: &ConclusionSet) -> Vec<(ModalLiteral, Status)> {
    literal_universe(ATOMS)
        .into_iter()
        .map(|l| {
            let d = c.get(&l).delta;
            (l, d)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn conclusions_ignore_rule_order(t in theory(), rotate in 0usize..15) {
        let mut other = t.clone();
        other.rules.reverse();
        let k = other.rules.len();
        if k > 0 {
            other.rules.rotate_left(rotate % k);
        }
        prop_assert_eq!(compute_conclusions(&t), compute_conclusions(&other));
    }

    #[test]
    fn tags_are_exclusive_and_delta_entails_partial(t in theory()) {
        for (_, c) in compute_conclusions(&t).iter() {
            if c.delta == Status::Proved {
                prop_assert_eq!(c.partial, Status::Proved);
            }
        }
    }

    #[test]
    fn defeasible_rules_leave_the_strict_core_alone(
        t in theory(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let extra = random_theory(&mut rng, Shape { rules: 3, ..Shape::default() });
        let mut bigger = t.clone();
        for (i, r) in extra.rules.into_iter().enumerate() {
            let kind = if i % 2 == 0 { RuleKind::Defeasible } else { RuleKind::Defeater };
            bigger.rules.push(Rule::new(format!("extra{i}"), kind, r.body, r.head));
        }
        prop_assert_eq!(delta_only(&compute_conclusions(&t)), delta_only(&compute_conclusions(&bigger)));
    }

    #[test]
    fn superiority_between_non_clashing_rules_is_irrelevant(t in theory()) {
        let before = compute_conclusions(&t);
        let clash = |w: &str, l: &str| {
            let (w, l) = (t.rule(w).unwrap(), t.rule(l).unwrap());
            conflicts_with(&w.head, &l.head)
        };
        for pair in t.superiority.iter().filter(|(w, l)| !clash(w, l)) {
            let mut fewer = t.clone();
            fewer.superiority.remove(pair);
            prop_assert_eq!(&compute_conclusions(&fewer), &before);
        }
    }
}
