use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::{Atom, DlError, ModalLiteral, Rule, Term, Theory};

/// Instantiates every rule over the active domain.
///
/// Variables range over the constants that occur anywhere in `t`. A rule
/// with variables `V1 < V2 < ...` (sorted by name) yields one instance per
/// assignment, labelled `label__c1__c2...`. Superiority between non-ground
/// rules carries over to every pair of their instances. Rules that are
/// already ground keep their label, so a variable-free theory comes back
/// unchanged.
pub fn ground_theory(t: &Theory) -> Result<Theory, DlError> {
    t.validate()?;
    let mut g = Grounder::new(active_domain(t), ground_labels(t));
    g.add_rules(&t.rules)?;
    Ok(g.finish(t.facts.clone(), &t.superiority, t.modal_conversion))
}

/// Constants occurring in the facts and rules of `t`.
pub fn active_domain(t: &Theory) -> BTreeSet<String> {
    let all_literals = t.facts.iter().chain(
        t.rules
            .iter()
            .flat_map(|r| r.body.iter().chain(std::iter::once(&r.head))),
    );
    let mut constants = BTreeSet::new();
    for ml in all_literals {
        for arg in &ml.literal.atom.args {
            if let Term::Const(c) = arg {
                if !constants.contains(c) {
                    constants.insert(c.clone());
                }
            }
        }
    }
    constants
}

/// Labels of the rules of `t` that have no variables.
pub fn ground_labels(t: &Theory) -> impl Iterator<Item = String> + '_ {
    t.rules
        .iter()
        .filter(|r| r.is_ground())
        .map(|r| r.label.clone())
}

/// Incremental grounding over a fixed domain.
///
/// Adding the rules of a theory in batches produces the same instances and
/// labels as [`ground_theory`] on the whole theory, provided the domain and
/// the reserved labels are those of the whole theory. Cloning a grounder
/// lets a common prefix of rules be grounded once.
#[derive(Debug, Clone)]
pub struct Grounder {
    constants: Vec<String>,
    used: HashSet<String>,
    instances: BTreeMap<String, Vec<String>>,
    rules: Vec<Rule>,
}

impl Grounder {
    /// `reserved` are labels that instances must avoid, normally those of
    /// the already-ground rules still to be added.
    pub fn new(
        domain: impl IntoIterator<Item = String>,
        reserved: impl IntoIterator<Item = String>,
    ) -> Self {
        let mut constants: Vec<String> = domain.into_iter().collect();
        constants.sort();
        constants.dedup();
        Self {
            constants,
            used: reserved.into_iter().collect(),
            instances: BTreeMap::new(),
            rules: Vec::new(),
        }
    }

    pub fn add_rules(&mut self, rules: &[Rule]) -> Result<(), DlError> {
        for rule in rules {
            let vars = rule_vars(rule)?;
            let labels = self.instances.entry(rule.label.clone()).or_default();
            if vars.is_empty() {
                labels.push(rule.label.clone());
                self.rules.push(rule.clone());
                continue;
            }
            if self.constants.is_empty() {
                continue;
            }
            let mut choice = vec![0usize; vars.len()];
            loop {
                let binding: BTreeMap<&str, &str> = vars
                    .iter()
                    .zip(&choice)
                    .map(|(v, &i)| (*v, self.constants[i].as_str()))
                    .collect();
                let label =
                    fresh_label(&rule.label, vars.iter().map(|v| binding[v]), &mut self.used);
                labels.push(label.clone());
                self.rules.push(Rule {
                    label,
                    kind: rule.kind,
                    mode: rule.mode,
                    body: rule.body.iter().map(|b| substitute(b, &binding)).collect(),
                    head: substitute(&rule.head, &binding),
                });
                if !advance(&mut choice, self.constants.len()) {
                    break;
                }
            }
        }
        Ok(())
    }

    /// The ground theory: the instances added so far, `facts`, and
    /// `superiority` carried over to instances. Every label in
    /// `superiority` must belong to an added rule.
    pub fn finish(
        self,
        facts: BTreeSet<ModalLiteral>,
        superiority: &BTreeSet<(String, String)>,
        modal_conversion: bool,
    ) -> Theory {
        let mut ground_sup = BTreeSet::new();
        for (w, l) in superiority {
            for wi in &self.instances[w] {
                for li in &self.instances[l] {
                    ground_sup.insert((wi.clone(), li.clone()));
                }
            }
        }
        Theory {
            facts,
            rules: self.rules,
            superiority: ground_sup,
            modal_conversion,
        }
    }
}

fn rule_vars(rule: &Rule) -> Result<Vec<&str>, DlError> {
    let body_vars: BTreeSet<&str> = rule
        .body
        .iter()
        .flat_map(|b| b.literal.atom.vars())
        .collect();
    if rule
        .head
        .literal
        .atom
        .vars()
        .any(|v| !body_vars.contains(v))
    {
        return Err(DlError::UnsafeRule(rule.label.clone()));
    }
    Ok(body_vars.into_iter().collect())
}

/// Odometer increment; false once every combination has been produced.
fn advance(choice: &mut [usize], base: usize) -> bool {
    for digit in choice.iter_mut().rev() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

fn fresh_label<'a>(
    base: &str,
    values: impl Iterator<Item = &'a str>,
    used: &mut HashSet<String>,
) -> String {
    let mut label = base.to_string();
    for v in values {
        label.push_str("__");
        label.extend(v.chars().map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        }));
    }
    if used.insert(label.clone()) {
        return label;
    }
    let mut n = 2;
    loop {
        let candidate = format!("{label}_{n}");
        if used.insert(candidate.clone()) {
            return candidate;
        }
        n += 1;
    }
}

fn substitute(ml: &ModalLiteral, binding: &BTreeMap<&str, &str>) -> ModalLiteral {
    let atom = &ml.literal.atom;
    let args = atom
        .args
        .iter()
        .map(|a| match a {
            Term::Var(v) => Term::Const(binding[v.as_str()].to_string()),
            c => c.clone(),
        })
        .collect();
    let mut out = ml.clone();
    out.literal.atom = Atom::new(atom.predicate.clone(), args);
    out
}
