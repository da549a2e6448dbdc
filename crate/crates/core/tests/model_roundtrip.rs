use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::subsequence;
use tdu_core::tduo::*;

fn text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9<>&][A-Za-z0-9<>&'\" :/._-]{0,10}[A-Za-z0-9]"
}

fn levels<G: Granularity>() -> impl Strategy<Value = BTreeSet<G>> {
    subsequence(G::all().to_vec(), 0..=G::all().len()).prop_map(|v| v.into_iter().collect())
}

fn condition() -> impl Strategy<Value = Condition> {
    (
        levels::<TemporalLevel>(),
        levels::<SpatialLevel>(),
        levels::<AbstractionLevel>(),
        subsequence(
            vec![
                ActorClass::DataOwner,
                ActorClass::MunicipalAuthority,
                ActorClass::CommercialOperator,
            ],
            0..=3,
        ),
        levels::<PurposeLevel>(),
    )
        .prop_map(
            |(temporality, spatiality, abstraction, actor, purpose)| Condition {
                temporality,
                spatiality,
                abstraction,
                actor: actor.into_iter().collect(),
                purpose,
            },
        )
        .prop_filter("at least one scope", |c| !c.is_empty())
}

fn policy() -> impl Strategy<Value = UsagePolicy> {
    let rule = (
        prop::sample::select(DeonticOperator::ALL.to_vec()),
        prop::collection::vec(condition(), 0..3),
    )
        .prop_map(|(operator, conditions)| PolicyRule {
            operator,
            conditions,
        });
    (text(), prop::collection::vec(rule, 0..4))
        .prop_map(|(name, rules)| UsagePolicy { name, rules })
}

fn metadata() -> impl Strategy<Value = EntityMetadata> {
    (text(), text(), text()).prop_map(|(n, k, v)| EntityMetadata::new(n, k, v))
}

fn item() -> impl Strategy<Value = DataItem> {
    let attribute = (
        text(),
        text(),
        text(),
        prop::collection::vec(metadata(), 1..3),
    )
        .prop_map(|(n, k, v, m)| EntityAttribute::new(n, k, v, m));
    (
        text(),
        text(),
        prop::option::of(text()),
        prop::collection::vec(attribute, 0..4),
        prop::option::of(prop::collection::vec(metadata(), 1..3)),
    )
        .prop_map(|(id, kind, domain, attributes, domain_metadata)| DataItem {
            entity_id: EntityId::new(id, kind),
            attribute_domain_name: domain,
            attributes,
            domain_metadata,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn policies_survive_both_encodings(p in policy()) {
        for format in [Format::Xml, Format::Json] {
            let text = serialize_usage_policy(&p, format);
            let back = parse_usage_policy(text.as_bytes(), format).unwrap();
            prop_assert_eq!(&back, &p);
            prop_assert_eq!(serialize_usage_policy(&back, format), text);
        }
    }

    #[test]
    fn items_survive_both_encodings(i in item()) {
        for format in [Format::Xml, Format::Json] {
            let text = serialize_data_item(&i, format);
            let back = parse_data_item(text.as_bytes(), format).unwrap();
            prop_assert_eq!(&back, &i);
            prop_assert_eq!(serialize_data_item(&back, format), text);
        }
    }

    #[test]
    fn format_is_sniffed(p in policy()) {
        prop_assert_eq!(sniff_format(serialize_usage_policy(&p, Format::Xml).as_bytes()), Format::Xml);
        prop_assert_eq!(sniff_format(serialize_usage_policy(&p, Format::Json).as_bytes()), Format::Json);
    }
}

fn rank_oracle<G: Granularity>(chain: &[G]) -> impl Fn(G, G) -> bool + '_ {
    move |g, r| {
        if g.is_any() {
            return true;
        }
        match (
            chain.iter().position(|&x| x == g),
            chain.iter().position(|&x| x == r),
        ) {
            (Some(gi), Some(ri)) => ri >= gi,
            _ => false,
        }
    }
}

fn check_table<G: Granularity>(chain: &[G]) {
    let oracle = rank_oracle(chain);
    for &g in G::all() {
        for &r in G::all() {
            assert_eq!(g.subsumes(r), oracle(g, r), "{g:?} vs {r:?}");
        }
    }
}

#[test]
fn subsumption_tables_match_declared_chains() {
    use AbstractionLevel as A;
    use SpatialLevel as S;
    use TemporalLevel as T;
    check_table(&[
        T::Secondly,
        T::Minutely,
        T::Hourly,
        T::Daily,
        T::Weekly,
        T::Monthly,
        T::Yearly,
    ]);
    check_table(&[S::Street, S::Zone]);
    check_table(&[A::Detail, A::Aggregation, A::Statistic]);
    assert_eq!(T::all().len(), 8);
    assert_eq!(S::all().len(), 3);
    assert_eq!(A::all().len(), 4);
}

fn check_order<G: Granularity>() {
    for &a in G::all() {
        assert!(a.subsumes(a));
        for &b in G::all() {
            if !b.is_any() && b != a {
                assert!(!b.subsumes(G::all().iter().copied().find(|x| x.is_any()).unwrap()));
            }
            for &c in G::all() {
                if a.subsumes(b) && b.subsumes(c) {
                    assert!(a.subsumes(c), "{a:?} {b:?} {c:?}");
                }
            }
        }
    }
}

#[test]
fn subsumption_is_a_preorder_with_any_on_top() {
    check_order::<TemporalLevel>();
    check_order::<SpatialLevel>();
    check_order::<AbstractionLevel>();
    check_order::<PurposeLevel>();
}
