use std::fmt::Write as _;

use super::{Decision, Outcome};
use crate::dl::{LiteralExplanation, RuleStatus};

fn rule_line(out: &mut String, role: &str, r: &RuleStatus) {
    let _ = write!(out, "    {role} {}", r.label);
    if r.applicable {
        out.push_str(" (applicable)");
    } else {
        let failed: Vec<String> = r
            .failed_body
            .iter()
            .map(|(l, t)| format!("{l} {t}"))
            .collect();
        let _ = write!(out, " (blocked: {})", failed.join(", "));
    }
    out.push('\n');
    for (w, l) in &r.comparisons {
        let verdict = if r.beaten_by.contains(w) {
            "applies"
        } else {
            "inapplicable winner"
        };
        let _ = writeln!(out, "      superiority {w} > {l}: {verdict}");
    }
}

fn entry(out: &mut String, e: &LiteralExplanation) {
    let tags = crate::dl::Conclusion {
        delta: e.delta,
        partial: e.partial,
    }
    .tags();
    let _ = writeln!(out, "  {} {}", e.literal, tags);
    if e.is_fact {
        out.push_str("    given as a fact\n");
    }
    if e.supporting.is_empty() && !e.is_fact {
        out.push_str("    no rule supports this literal\n");
    }
    for r in &e.supporting {
        rule_line(out, "supported by", r);
    }
    for r in &e.attacking {
        rule_line(out, "attacked by", r);
    }
}

/// Human-readable account of a decision: outcome, failing literals and,
/// per queried literal, the rules for and against it.
pub fn explain(d: &Decision) -> String {
    let mut out = String::new();
    let verdict = match d.outcome {
        Outcome::Granted => "GRANTED",
        Outcome::Refused => "REFUSED",
    };
    let r = &d.request;
    let _ = writeln!(out, "{verdict}: {} {}", d.query, d.tags);
    let _ = write!(
        out,
        "request: subject={} actor={} spatial={} temporal={} abstraction={}",
        r.subject,
        r.actor_class.predicate(),
        r.spatial,
        r.temporal,
        r.abstraction
    );
    if let Some(p) = r.purpose {
        let _ = write!(out, " purpose={p}");
    }
    out.push('\n');
    let policies = if d.policies.is_empty() {
        "(none)".to_string()
    } else {
        d.policies.join(", ")
    };
    let _ = writeln!(out, "policies: {policies}");
    if let Some(c) = &d.effective_constraints {
        let _ = writeln!(
            out,
            "release at: spatial={} temporal={} abstraction={}",
            c.spatial, c.temporal, c.abstraction
        );
    }
    if !d.refusal_reasons.is_empty() {
        out.push_str("unprovable:\n");
        for reason in &d.refusal_reasons {
            let _ = write!(out, "  {} {}", reason.literal, reason.tags);
            if let Some(n) = &reason.note {
                let _ = write!(out, " ({n})");
            }
            out.push('\n');
        }
    }
    out.push_str("trace:\n");
    for e in &d.trace.entries {
        entry(&mut out, e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::scenario;

    #[test]
    fn refusal_report_names_unprovable_permissions() {
        let r = ConsumerRequest::new(
            "acme",
            ActorClass::CommercialOperator,
            SpatialLevel::Street,
            TemporalLevel::Hourly,
            AbstractionLevel::Detail,
        );
        let d = evaluate(&r, &[scenario::co_policy()], &scenario::facts()).unwrap();
        let text = explain(&d);
        assert!(
            text.starts_with("REFUSED: [O]ConsumerRequest(acme) -Δ -∂\n"),
            "{text}"
        );
        for lit in [
            "[P]SpatialScope(acme, street) -Δ -∂",
            "[P]TemporalScope(acme, hourly) -Δ -∂",
            "[P]AbstractScope(acme, detail) -Δ -∂",
        ] {
            assert!(text.contains(&format!("\n  {lit}\n")), "{lit}\n{text}");
        }
        assert_eq!(explain(&d), text);
    }

    #[test]
    fn grant_report_lists_firing_rules() {
        let r = ConsumerRequest::new(
            "city",
            ActorClass::MunicipalAuthority,
            SpatialLevel::Street,
            TemporalLevel::Hourly,
            AbstractionLevel::Aggregation,
        );
        let d = evaluate(&r, &[scenario::ma_policy()], &scenario::facts()).unwrap();
        let text = explain(&d);
        assert!(text.starts_with("GRANTED"), "{text}");
        assert!(
            text.contains("supported by request__city (applicable)"),
            "{text}"
        );
        assert!(
            text.contains("supported by urn_tdu_policy_ma_r0_1__city (applicable)"),
            "{text}"
        );
        assert!(text.contains("release at: spatial=street temporal=hourly abstraction=aggregation"));
    }

    #[test]
    fn empty_policy_report() {
        let r = ConsumerRequest::new(
            "city",
            ActorClass::MunicipalAuthority,
            SpatialLevel::Zone,
            TemporalLevel::Daily,
            AbstractionLevel::Statistic,
        );
        let d = evaluate(&r, &[], &scenario::facts()).unwrap();
        let text = explain(&d);
        assert!(text.contains("policies: (none)"));
        assert_eq!(
            text.matches("no rule supports this literal").count(),
            3,
            "{text}"
        );
    }
}
