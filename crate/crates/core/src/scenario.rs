//! The smart-city scenario: a data owner, a municipal authority and a
//! commercial operator sharing air-quality sensor data.

use std::collections::BTreeSet;

use crate::dl::ModalLiteral;
use crate::enforcement::actor_fact;
use crate::tduo::{parse_usage_policy, ActorClass, Format, UsagePolicy};

pub const DO_POLICY_XML: &str = include_str!("../policies/do.xml");
pub const MA_POLICY_XML: &str = include_str!("../policies/ma.xml");
pub const CO_POLICY_XML: &str = include_str!("../policies/co.xml");

/// Subjects registered by default, one per actor class.
pub const SUBJECTS: [(&str, ActorClass); 3] = [
    ("owner", ActorClass::DataOwner),
    ("city", ActorClass::MunicipalAuthority),
    ("acme", ActorClass::CommercialOperator),
];

fn parse(xml: &str) -> UsagePolicy {
    parse_usage_policy(xml.as_bytes(), Format::Xml).expect("built-in policy is valid")
}

/// Full access for data owners.
pub fn do_policy() -> UsagePolicy {
    parse(DO_POLICY_XML)
}

/// Hourly street-level aggregates for the municipal authority.
pub fn ma_policy() -> UsagePolicy {
    parse(MA_POLICY_XML)
}

/// Weekly zone-level statistics for commercial operators.
pub fn co_policy() -> UsagePolicy {
    parse(CO_POLICY_XML)
}

pub fn policies() -> Vec<UsagePolicy> {
    vec![do_policy(), ma_policy(), co_policy()]
}

/// Actor-class facts for [`SUBJECTS`].
pub fn facts() -> BTreeSet<ModalLiteral> {
    SUBJECTS.iter().map(|(s, c)| actor_fact(s, *c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile_policy, detect_conflicts, merge_theories};
    use crate::dl::RuleKind;

    #[test]
    fn rule_counts() {
        let count = |p: &UsagePolicy| {
            compile_policy(p, "DO")
                .unwrap()
                .rules
                .iter()
                .filter(|r| r.kind == RuleKind::Defeasible)
                .count()
        };
        assert_eq!(count(&do_policy()), 4);
        assert_eq!(count(&ma_policy()), 3);
        assert_eq!(count(&co_policy()), 3);
    }

    #[test]
    fn merged_policies_have_no_conflicts() {
        let compiled: Vec<_> = policies()
            .iter()
            .map(|p| compile_policy(p, "DO").unwrap())
            .collect();
        assert!(detect_conflicts(&merge_theories(&compiled)).is_empty());
    }
}
