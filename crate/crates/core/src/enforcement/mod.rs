//! Trust enforcement: a consumer request becomes the obligation rule
//!
//! ```text
//! request: CO(X), [P]SpatialScope(X, s), [P]TemporalScope(X, t),
//!          [P]AbstractScope(X, a) =>o ConsumerRequest(X).
//! ```
//!
//! which is added to the compiled policies. The request is granted iff
//! `+∂ [O]ConsumerRequest(subject)` holds.

mod report;

use std::collections::{BTreeSet, VecDeque};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compiler::{
    compile_policy, merge_theories, parse_literal, parse_theory, scope_literal, theory_to_text,
    CompileError, SUBJECT_VAR,
};
use crate::data::TransformSpec;
use crate::dl::{
    active_domain, compute_conclusions, explain_literals, ground_labels, ground_theory, Atom,
    DlError, Grounder, Literal, LiteralExplanation, ModalLiteral, Modality, Rule, Status, Term,
    Theory,
};
use crate::tduo::{
    AbstractionLevel, ActorClass, Dimension, EntityId, PurposeLevel, SpatialLevel, TemporalLevel,
    UsagePolicy,
};

pub use report::explain;

pub const REQUEST_LABEL: &str = "request";
pub const REQUEST_PREDICATE: &str = "ConsumerRequest";
/// Actor class assumed for policy conditions that name none.
pub const DEFAULT_ACTOR: &str = "DO";

#[derive(Debug, Error)]
pub enum EnforcementError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Dl(#[from] DlError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// Which data a request is about. Empty fields match everything; `*` in
/// the id pattern matches any run of characters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetSelector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_pattern: Option<String>,
}

fn glob(pattern: &str, text: &str) -> bool {
    let (p, t): (Vec<char>, Vec<char>) = (pattern.chars().collect(), text.chars().collect());
    // match_at[j]: pattern prefix so far matches text prefix of length j.
    let mut row = vec![false; t.len() + 1];
    row[0] = true;
    for &pc in &p {
        let mut next = vec![false; t.len() + 1];
        if pc == '*' {
            let mut seen = false;
            for j in 0..=t.len() {
                seen |= row[j];
                next[j] = seen;
            }
        } else {
            for j in 1..=t.len() {
                next[j] = row[j - 1] && t[j - 1] == pc;
            }
        }
        row = next;
    }
    row[t.len()]
}

impl TargetSelector {
    pub fn matches(&self, entity: &EntityId) -> bool {
        self.entity_type.as_ref().is_none_or(|k| *k == entity.kind)
            && self.id_pattern.as_ref().is_none_or(|p| glob(p, &entity.id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConsumerRequest {
    pub subject: String,
    pub actor_class: ActorClass,
    pub spatial: SpatialLevel,
    pub temporal: TemporalLevel,
    pub abstraction: AbstractionLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<PurposeLevel>,
    #[serde(default)]
    pub target: TargetSelector,
}

impl ConsumerRequest {
    pub fn new(
        subject: impl Into<String>,
        actor_class: ActorClass,
        spatial: SpatialLevel,
        temporal: TemporalLevel,
        abstraction: AbstractionLevel,
    ) -> Self {
        Self {
            subject: subject.into(),
            actor_class,
            spatial,
            temporal,
            abstraction,
            purpose: None,
            target: TargetSelector::default(),
        }
    }

    pub fn with_purpose(mut self, purpose: PurposeLevel) -> Self {
        self.purpose = Some(purpose);
        self
    }

    pub fn validate(&self) -> Result<(), EnforcementError> {
        if self.subject.trim().is_empty() {
            return Err(EnforcementError::InvalidRequest("empty subject".into()));
        }
        Ok(())
    }

    pub fn spec(&self) -> TransformSpec {
        TransformSpec::new(self.spatial, self.temporal, self.abstraction)
    }
}

/// `class(subject)`.
pub fn actor_fact(subject: &str, class: ActorClass) -> ModalLiteral {
    ModalLiteral::fact(Literal::pos(Atom::ground(class.predicate(), [subject])))
}

/// `[O]ConsumerRequest(subject)`.
pub fn request_literal(subject: &str) -> ModalLiteral {
    ModalLiteral::obl(Literal::pos(Atom::ground(REQUEST_PREDICATE, [subject])))
}

/// The obligation rule standing for `r`, over the subject variable.
pub fn build_request_rule(r: &ConsumerRequest) -> Rule {
    let mut body = vec![ModalLiteral::fact(Literal::pos(Atom::new(
        r.actor_class.predicate(),
        vec![Term::var(SUBJECT_VAR)],
    )))];
    body.push(scope_literal(
        Dimension::Spatial,
        r.spatial.to_string().as_str(),
        Modality::Perm,
        false,
    ));
    body.push(scope_literal(
        Dimension::Temporal,
        r.temporal.to_string().as_str(),
        Modality::Perm,
        false,
    ));
    body.push(scope_literal(
        Dimension::Abstraction,
        r.abstraction.to_string().as_str(),
        Modality::Perm,
        false,
    ));
    if let Some(p) = r.purpose {
        body.push(scope_literal(
            Dimension::Purpose,
            p.to_string().as_str(),
            Modality::Perm,
            false,
        ));
    }
    let head = ModalLiteral::obl(Literal::pos(Atom::new(
        REQUEST_PREDICATE,
        vec![Term::var(SUBJECT_VAR)],
    )));
    Rule::defeasible(REQUEST_LABEL, body, head)
}

fn instantiate(lit: &ModalLiteral, subject: &str) -> ModalLiteral {
    let mut out = lit.clone();
    for a in &mut out.literal.atom.args {
        if *a == Term::var(SUBJECT_VAR) {
            *a = Term::constant(subject);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Granted,
    Refused,
}

/// A literal that kept the request from being provable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefusalReason {
    pub literal: String,
    pub tags: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Everything needed to check a decision: the assembled (unground) theory
/// and, per queried literal, its tags with supporting and attacking rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTrace {
    pub theory: String,
    pub entries: Vec<LiteralExplanation>,
}

impl ProofTrace {
    /// Re-runs the reasoner on the recorded theory and checks every recorded
    /// tag.
    pub fn replay(&self) -> Result<bool, EnforcementError> {
        let t = parse_theory(&self.theory)?;
        let c = compute_conclusions(&ground_theory(&t)?);
        for e in &self.entries {
            let got = c.get(&parse_literal(&e.literal)?);
            if got.delta != e.delta || got.partial != e.partial {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Hex SHA-256 of the trace's JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("trace serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Decision {
    pub outcome: Outcome,
    pub request: ConsumerRequest,
    /// The queried literal and its tags.
    pub query: String,
    pub tags: String,
    /// Names of the policies the decision was taken against.
    pub policies: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_constraints: Option<TransformSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refusal_reasons: Vec<RefusalReason>,
    pub trace: ProofTrace,
}

impl Decision {
    pub fn granted(&self) -> bool {
        self.outcome == Outcome::Granted
    }
}

/// Policy rules grounded over one domain and fact set.
#[derive(Debug)]
struct GroundedPolicies {
    domain: BTreeSet<String>,
    facts: BTreeSet<ModalLiteral>,
    grounder: Grounder,
}

/// Grounded policy rules kept per enforcer, most recent last.
const GROUNDING_CACHE: usize = 16;

/// Compiled policies, ready to answer requests.
///
/// The grounded policy rules of recent requests are kept and reused for
/// requests with the same active domain and facts; clones share them.
#[derive(Debug, Clone)]
pub struct Enforcer {
    policy_names: Vec<String>,
    theory: Theory,
    mentions_purpose: bool,
    grounded: Arc<Mutex<VecDeque<GroundedPolicies>>>,
}

impl Enforcer {
    pub fn new(policies: &[UsagePolicy]) -> Result<Self, EnforcementError> {
        Self::with_options(policies, DEFAULT_ACTOR, true)
    }

    pub fn with_options(
        policies: &[UsagePolicy],
        fallback_actor: &str,
        modal_conversion: bool,
    ) -> Result<Self, EnforcementError> {
        let compiled = policies
            .iter()
            .map(|p| compile_policy(p, fallback_actor))
            .collect::<Result<Vec<_>, _>>()?;
        let mut theory = merge_theories(&compiled);
        theory.modal_conversion = modal_conversion;
        Ok(Self {
            policy_names: policies.iter().map(|p| p.name.clone()).collect(),
            theory,
            mentions_purpose: policies.iter().any(UsagePolicy::mentions_purpose),
            grounded: Arc::default(),
        })
    }

    /// Grounds `assembled`, whose rules are the policy rules followed by
    /// the request's, reusing the policy instances of an earlier call when
    /// possible. The result equals `ground_theory(assembled)`.
    fn ground(&self, assembled: &Theory) -> Result<Theory, EnforcementError> {
        let n = self.theory.rules.len();
        let same_policy_labels = assembled.rules.len() >= n
            && assembled.rules[..n]
                .iter()
                .zip(&self.theory.rules)
                .all(|(a, b)| a.label == b.label);
        let request_rules = &assembled.rules[n.min(assembled.rules.len())..];
        if !same_policy_labels || request_rules.iter().any(Rule::is_ground) {
            return Ok(ground_theory(assembled)?);
        }
        assembled.validate()?;
        let domain = active_domain(assembled);
        let mut grounder = {
            let mut cache = self.grounded.lock().unwrap_or_else(|e| e.into_inner());
            let hit = cache
                .iter()
                .position(|c| c.domain == domain && c.facts == assembled.facts);
            match hit {
                Some(i) => {
                    let entry = cache.remove(i).expect("index in range");
                    let g = entry.grounder.clone();
                    cache.push_back(entry);
                    g
                }
                None => {
                    let mut g = Grounder::new(domain.iter().cloned(), ground_labels(assembled));
                    g.add_rules(&assembled.rules[..n])?;
                    if cache.len() == GROUNDING_CACHE {
                        cache.pop_front();
                    }
                    cache.push_back(GroundedPolicies {
                        domain,
                        facts: assembled.facts.clone(),
                        grounder: g.clone(),
                    });
                    g
                }
            }
        };
        grounder.add_rules(request_rules)?;
        Ok(grounder.finish(
            assembled.facts.clone(),
            &assembled.superiority,
            assembled.modal_conversion,
        ))
    }

    /// The merged policy theory (without request or facts).
    pub fn theory(&self) -> &Theory {
        &self.theory
    }

    pub fn policy_names(&self) -> &[String] {
        &self.policy_names
    }

    /// Decides `r` given `facts` (which should include the subject's actor
    /// class).
    pub fn evaluate(
        &self,
        r: &ConsumerRequest,
        facts: &BTreeSet<ModalLiteral>,
    ) -> Result<Decision, EnforcementError> {
        r.validate()?;
        let mut effective = r.clone();
        if !self.mentions_purpose {
            effective.purpose = None;
        }
        let rule = build_request_rule(&effective);
        let mut request_theory = Theory::new();
        request_theory.facts = facts.clone();
        request_theory.rules.push(rule.clone());
        let mut assembled = merge_theories(&[self.theory.clone(), request_theory]);
        assembled.modal_conversion = self.theory.modal_conversion;
        let ground = self.ground(&assembled)?;
        let conclusions = compute_conclusions(&ground);

        let query = request_literal(&r.subject);
        let status = conclusions.get(&query);
        let outcome = if status.partial == Status::Proved {
            Outcome::Granted
        } else {
            Outcome::Refused
        };

        let body: Vec<ModalLiteral> = rule
            .body
            .iter()
            .map(|b| instantiate(b, &r.subject))
            .collect();
        let mut refusal_reasons = Vec::new();
        if outcome == Outcome::Refused {
            for (i, b) in body.iter().enumerate() {
                let c = conclusions.get(b);
                if c.partial != Status::Proved {
                    refusal_reasons.push(RefusalReason {
                        literal: b.to_string(),
                        tags: c.tags(),
                        note: (i == 0).then(|| "unprovable actor class".to_string()),
                    });
                }
            }
            refusal_reasons.push(RefusalReason {
                literal: query.to_string(),
                tags: status.tags(),
                note: Some(
                    if status.partial == Status::Undetermined {
                        "undetermined"
                    } else {
                        "not defeasibly provable"
                    }
                    .to_string(),
                ),
            });
        }

        let queried: Vec<ModalLiteral> = std::iter::once(query.clone()).chain(body).collect();
        let entries = explain_literals(&ground, &conclusions, &queried);
        Ok(Decision {
            outcome,
            request: r.clone(),
            query: query.to_string(),
            tags: status.tags(),
            policies: self.policy_names.clone(),
            effective_constraints: (outcome == Outcome::Granted).then(|| r.spec()),
            refusal_reasons,
            trace: ProofTrace {
                theory: theory_to_text(&assembled),
                entries,
            },
        })
    }
}

/// Compiles `policies` and decides `r`; see [`Enforcer::evaluate`].
pub fn evaluate(
    r: &ConsumerRequest,
    policies: &[UsagePolicy],
    facts: &BTreeSet<ModalLiteral>,
) -> Result<Decision, EnforcementError> {
    Enforcer::new(policies)?.evaluate(r, facts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario;

    fn facts() -> BTreeSet<ModalLiteral> {
        scenario::facts()
    }

    fn req(
        subject: &str,
        class: ActorClass,
        s: SpatialLevel,
        t: TemporalLevel,
        a: AbstractionLevel,
    ) -> ConsumerRequest {
        ConsumerRequest::new(subject, class, s, t, a)
    }

    #[test]
    fn request_rule_matches_the_worked_example() {
        let r = req(
            "acme",
            ActorClass::CommercialOperator,
            SpatialLevel::Street,
            TemporalLevel::Hourly,
            AbstractionLevel::Detail,
        );
        assert_eq!(
            build_request_rule(&r).to_string(),
            "request: CO(X), [P]SpatialScope(X, street), [P]TemporalScope(X, hourly), \
             [P]AbstractScope(X, detail) =>o ConsumerRequest(X)."
        );
        assert_eq!(build_request_rule(&r).body.len(), 4);
        let r = r.with_purpose(PurposeLevel::CommercialUse);
        assert_eq!(build_request_rule(&r).body.len(), 5);
        let d = req(
            "owner",
            ActorClass::DataOwner,
            SpatialLevel::Any,
            TemporalLevel::Any,
            AbstractionLevel::Any,
        );
        let rule = build_request_rule(&d);
        assert!(rule.body[1..]
            .iter()
            .all(|b| b.modality == Modality::Perm && b.to_string().ends_with("any)")));
    }

    #[test]
    fn commercial_detail_is_refused() {
        let r = req(
            "acme",
            ActorClass::CommercialOperator,
            SpatialLevel::Street,
            TemporalLevel::Hourly,
            AbstractionLevel::Detail,
        );
        let d = evaluate(&r, &[scenario::co_policy()], &facts()).unwrap();
        assert_eq!(d.outcome, Outcome::Refused);
        assert_eq!(d.tags, "-Δ -∂");
        let literals: Vec<&str> = d
            .refusal_reasons
            .iter()
            .map(|x| x.literal.as_str())
            .collect();
        assert_eq!(
            literals,
            [
                "[P]SpatialScope(acme, street)",
                "[P]TemporalScope(acme, hourly)",
                "[P]AbstractScope(acme, detail)",
                "[O]ConsumerRequest(acme)",
            ]
        );
        assert!(d.refusal_reasons.iter().all(|x| x.tags == "-Δ -∂"));
        assert!(d.effective_constraints.is_none());
        assert!(d.trace.replay().unwrap());
    }

    #[test]
    fn municipal_and_commercial_grants() {
        let r = req(
            "city",
            ActorClass::MunicipalAuthority,
            SpatialLevel::Street,
            TemporalLevel::Hourly,
            AbstractionLevel::Aggregation,
        );
        let d = evaluate(&r, &[scenario::ma_policy()], &facts()).unwrap();
        assert_eq!(d.outcome, Outcome::Granted);
        assert_eq!(d.effective_constraints, Some(r.spec()));
        assert!(d.refusal_reasons.is_empty());
        assert!(d.trace.replay().unwrap());

        let r = req(
            "acme",
            ActorClass::CommercialOperator,
            SpatialLevel::Zone,
            TemporalLevel::Weekly,
            AbstractionLevel::Statistic,
        );
        assert!(evaluate(&r, &[scenario::co_policy()], &facts())
            .unwrap()
            .granted());

        let r = req(
            "city",
            ActorClass::MunicipalAuthority,
            SpatialLevel::Street,
            TemporalLevel::Minutely,
            AbstractionLevel::Aggregation,
        );
        assert!(!evaluate(&r, &[scenario::ma_policy()], &facts())
            .unwrap()
            .granted());
    }

    #[test]
    fn missing_actor_fact_is_named() {
        let r = req(
            "stranger",
            ActorClass::MunicipalAuthority,
            SpatialLevel::Street,
            TemporalLevel::Hourly,
            AbstractionLevel::Aggregation,
        );
        let d = evaluate(&r, &scenario::policies(), &facts()).unwrap();
        assert!(!d.granted());
        assert_eq!(d.refusal_reasons[0].literal, "MA(stranger)");
        assert_eq!(
            d.refusal_reasons[0].note.as_deref(),
            Some("unprovable actor class")
        );
    }

    #[test]
    fn purpose_guard_only_when_mentioned() {
        let r = req(
            "city",
            ActorClass::MunicipalAuthority,
            SpatialLevel::Street,
            TemporalLevel::Hourly,
            AbstractionLevel::Aggregation,
        )
        .with_purpose(PurposeLevel::CommercialUse);
        // The MA policy says nothing about purpose.
        assert!(evaluate(&r, &[scenario::ma_policy()], &facts())
            .unwrap()
            .granted());
        // The DO policy does, and grants no purpose to MA.
        assert!(!evaluate(&r, &scenario::policies(), &facts())
            .unwrap()
            .granted());
        let owner = req(
            "owner",
            ActorClass::DataOwner,
            SpatialLevel::Street,
            TemporalLevel::Hourly,
            AbstractionLevel::Detail,
        )
        .with_purpose(PurposeLevel::CommercialUse);
        assert!(evaluate(&owner, &scenario::policies(), &facts())
            .unwrap()
            .granted());
    }

    #[test]
    fn empty_policy_set_refuses() {
        let r = req(
            "owner",
            ActorClass::DataOwner,
            SpatialLevel::Any,
            TemporalLevel::Any,
            AbstractionLevel::Any,
        );
        let d = evaluate(&r, &[], &facts()).unwrap();
        assert!(!d.granted());
        assert_eq!(d.refusal_reasons.len(), 4);
    }

    #[test]
    fn decisions_serialize() {
        let r = req(
            "city",
            ActorClass::MunicipalAuthority,
            SpatialLevel::Zone,
            TemporalLevel::Daily,
            AbstractionLevel::Statistic,
        );
        let d = evaluate(&r, &scenario::policies(), &facts()).unwrap();
        assert!(d.granted());
        let json = serde_json::to_string(&d).unwrap();
        let back: Decision = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.trace.digest(), d.trace.digest());
        assert_eq!(d.trace.digest().len(), 64);
    }

    #[test]
    fn subject_must_be_named() {
        let r = req(
            " ",
            ActorClass::DataOwner,
            SpatialLevel::Any,
            TemporalLevel::Any,
            AbstractionLevel::Any,
        );
        assert!(matches!(
            evaluate(&r, &[], &facts()),
            Err(EnforcementError::InvalidRequest(_))
        ));
    }

    #[test]
    fn target_selectors() {
        let e = EntityId::new("sensor-0-1", "AirQualitySensor");
        assert!(TargetSelector::default().matches(&e));
        let sel = |t: Option<&str>, p: Option<&str>| TargetSelector {
            entity_type: t.map(String::from),
            id_pattern: p.map(String::from),
        };
        assert!(sel(Some("AirQualitySensor"), Some("sensor-0-*")).matches(&e));
        assert!(sel(None, Some("*1")).matches(&e));
        assert!(sel(None, Some("*")).matches(&e));
        assert!(!sel(None, Some("sensor-1-*")).matches(&e));
        assert!(!sel(Some("Weather"), None).matches(&e));
        assert!(glob("a*b*c", "axxbyyc"));
        assert!(!glob("a*b", "ab c"));
        assert!(glob("", ""));
        assert!(!glob("", "x"));
    }

    #[test]
    fn reused_grounding_matches_full_grounding() {
        let shared = Enforcer::new(&scenario::policies()).unwrap();
        let mut facts = facts();
        let mut requests = Vec::new();
        for (subject, class) in scenario::SUBJECTS {
            for s in [SpatialLevel::Street, SpatialLevel::Zone, SpatialLevel::Any] {
                requests.push(req(
                    subject,
                    class,
                    s,
                    TemporalLevel::Weekly,
                    AbstractionLevel::Statistic,
                ));
            }
        }
        requests.push(req(
            "stranger",
            ActorClass::CommercialOperator,
            SpatialLevel::Zone,
            TemporalLevel::Weekly,
            AbstractionLevel::Statistic,
        ));
        for (i, r) in requests.iter().enumerate() {
            if i == 5 {
                facts.insert(actor_fact("stranger", ActorClass::CommercialOperator));
            }
            for _ in 0..2 {
                let warm = shared.evaluate(r, &facts).unwrap();
                let cold = Enforcer::new(&scenario::policies())
                    .unwrap()
                    .evaluate(r, &facts)
                    .unwrap();
                assert_eq!(warm, cold);
                let mut assembled = merge_theories(&[shared.theory().clone(), {
                    let mut t = Theory::new();
                    t.facts = facts.clone();
                    t.rules.push(build_request_rule(r));
                    t
                }]);
                assembled.modal_conversion = true;
                assert_eq!(
                    shared.ground(&assembled).unwrap(),
                    ground_theory(&assembled).unwrap()
                );
            }
        }
    }

    #[test]
    fn undetermined_request_is_refused() {
        let cyclic = parse_theory(
            "a: CO(X), [P]SpatialScope(X, zone) => [P]SpatialScope(X, street).\n\
             b: CO(X), [P]SpatialScope(X, street) => [P]SpatialScope(X, zone).\n\
             t: CO(X) =>p TemporalScope(X, hourly).\n\
             s: CO(X) =>p AbstractScope(X, detail).\n",
        )
        .unwrap();
        let e = Enforcer {
            policy_names: vec!["cyclic".into()],
            theory: cyclic,
            mentions_purpose: false,
            grounded: Arc::default(),
        };
        let r = req(
            "acme",
            ActorClass::CommercialOperator,
            SpatialLevel::Street,
            TemporalLevel::Hourly,
            AbstractionLevel::Detail,
        );
        let d = e.evaluate(&r, &facts()).unwrap();
        assert_eq!(d.outcome, Outcome::Refused);
        let spatial = &d.refusal_reasons[0];
        assert_eq!(spatial.literal, "[P]SpatialScope(acme, street)");
        assert!(spatial.tags.contains('?'), "{}", spatial.tags);
        assert_eq!(
            d.refusal_reasons.last().unwrap().note.as_deref(),
            Some("undetermined")
        );
    }
}
