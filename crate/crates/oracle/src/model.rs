//! Seeded random usage policies and data items for encoding round trips.
//! Text fields mix in XML-special characters and inner whitespace.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdu_core::tduo::{
    AbstractionLevel, ActorClass, Condition, DataItem, DeonticOperator, EntityAttribute, EntityId,
    EntityMetadata, Granularity, PolicyRule, PurposeLevel, SpatialLevel, TemporalLevel,
    UsagePolicy,
};

const EDGE: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
const SPECIAL: &[u8] = b"<>&'\" :/._-";

fn pick(rng: &mut impl Rng, set: &[u8]) -> char {
    char::from(*set.choose(rng).expect("non-empty set"))
}

/// Non-empty text that starts and ends with a non-space character.
pub fn random_text(rng: &mut impl Rng) -> String {
    let mut s = String::new();
    s.push(if rng.random_bool(0.2) {
        pick(rng, b"<>&")
    } else {
        pick(rng, EDGE)
    });
    for _ in 0..rng.random_range(0..=10) {
        s.push(if rng.random_bool(0.3) {
            pick(rng, SPECIAL)
        } else {
            pick(rng, EDGE)
        });
    }
    s.push(pick(rng, EDGE));
    s
}

fn subset<T: Copy + Ord>(rng: &mut impl Rng, all: &[T]) -> std::collections::BTreeSet<T> {
    all.iter()
        .copied()
        .filter(|_| rng.random_bool(0.3))
        .collect()
}

fn levels<G: Granularity>(rng: &mut impl Rng) -> std::collections::BTreeSet<G> {
    subset(rng, G::all())
}

fn condition(rng: &mut impl Rng) -> Condition {
    loop {
        let c = Condition {
            temporality: levels::<TemporalLevel>(rng),
            spatiality: levels::<SpatialLevel>(rng),
            abstraction: levels::<AbstractionLevel>(rng),
            actor: subset(rng, &ActorClass::ALL),
            purpose: levels::<PurposeLevel>(rng),
        };
        if !c.is_empty() {
            return c;
        }
    }
}

pub fn random_policy(rng: &mut impl Rng) -> UsagePolicy {
    let rules = (0..rng.random_range(0..4))
        .map(|_| PolicyRule {
            operator: *DeonticOperator::ALL.choose(rng).expect("three operators"),
            conditions: (0..rng.random_range(0..3))
                .map(|_| condition(rng))
                .collect(),
        })
        .collect();
    UsagePolicy {
        name: random_text(rng),
        rules,
    }
}

fn metadata(rng: &mut impl Rng) -> Vec<EntityMetadata> {
    (0..rng.random_range(1..3))
        .map(|_| EntityMetadata::new(random_text(rng), random_text(rng), random_text(rng)))
        .collect()
}

pub fn random_item(rng: &mut impl Rng) -> DataItem {
    DataItem {
        entity_id: EntityId::new(random_text(rng), random_text(rng)),
        attribute_domain_name: rng.random_bool(0.5).then(|| random_text(rng)),
        attributes: (0..rng.random_range(0..4))
            .map(|_| {
                EntityAttribute::new(
                    random_text(rng),
                    random_text(rng),
                    random_text(rng),
                    metadata(rng),
                )
            })
            .collect(),
        domain_metadata: rng.random_bool(0.5).then(|| metadata(rng)),
    }
}

/// `count` policies and `count` items from `seed`.
pub fn document_corpus(seed: u64, count: usize) -> (Vec<UsagePolicy>, Vec<DataItem>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policies = (0..count).map(|_| random_policy(&mut rng)).collect();
    let items = (0..count).map(|_| random_item(&mut rng)).collect();
    (policies, items)
}
