use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::conflict::conflict_set;
use super::{
    Conclusion, ConclusionSet, ModalLiteral, Modality, Polarity, ProofTag, Rule, RuleKind, Status,
    Theory,
};

/// Label prefix of the strict `[O]p -> [P]p` rules added when modal
/// conversion is on.
pub(crate) const CONVERSION_PREFIX: &str = "@conv:";

struct IndexedRule {
    kind: RuleKind,
    body: Vec<usize>,
    head: usize,
}

/// Interned view of a ground theory.
struct Index {
    lits: Vec<ModalLiteral>,
    ids: HashMap<ModalLiteral, usize>,
    rules: Vec<IndexedRule>,
    /// Rules grouped by head literal.
    by_head: Vec<Vec<usize>>,
    conflicts: Vec<Vec<usize>>,
    is_fact: Vec<bool>,
    superior: HashSet<(usize, usize)>,
}

impl Index {
    fn intern(&mut self, lit: &ModalLiteral) -> usize {
        if let Some(&id) = self.ids.get(lit) {
            return id;
        }
        let id = self.lits.len();
        self.lits.push(lit.clone());
        self.ids.insert(lit.clone(), id);
        id
    }

    fn build(t: &Theory) -> Self {
        let mut idx = Index {
            lits: Vec::new(),
            ids: HashMap::new(),
            rules: Vec::new(),
            by_head: Vec::new(),
            conflicts: Vec::new(),
            is_fact: Vec::new(),
            superior: HashSet::new(),
        };
        let rules = effective_rules(t);
        let mut label_ids: HashMap<&str, usize> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            let body = r.body.iter().map(|b| idx.intern(b)).collect();
            let head = idx.intern(&r.head);
            label_ids.insert(&r.label, i);
            idx.rules.push(IndexedRule {
                kind: r.kind,
                body,
                head,
            });
        }
        for fact in &t.facts {
            idx.intern(fact);
        }
        // Close the literal universe under the conflict relation.
        let mut i = 0;
        while i < idx.lits.len() {
            let attackers: Vec<usize> = conflict_set(&idx.lits[i].clone())
                .iter()
                .map(|c| idx.intern(c))
                .collect();
            idx.conflicts.push(attackers);
            i += 1;
        }
        let n = idx.lits.len();
        idx.by_head = vec![Vec::new(); n];
        for (ri, r) in idx.rules.iter().enumerate() {
            idx.by_head[r.head].push(ri);
        }
        idx.is_fact = vec![false; n];
        for fact in &t.facts {
            idx.is_fact[idx.ids[fact]] = true;
        }
        for (w, l) in superiority_with_conversion(t) {
            if let (Some(&wi), Some(&li)) = (label_ids.get(w.as_str()), label_ids.get(l.as_str())) {
                idx.superior.insert((wi, li));
            }
        }
        idx
    }

    fn attackers(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.conflicts[q]
            .iter()
            .flat_map(move |&c| self.by_head[c].iter().copied())
    }

    fn supporters(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.by_head[q]
            .iter()
            .copied()
            .filter(move |&r| self.rules[r].kind != RuleKind::Defeater)
    }
}

/// Rules of `t` plus, under modal conversion, one strict `[O]p -> [P]p`
/// rule per obligation that occurs as a rule head or fact.
pub(crate) fn effective_rules(t: &Theory) -> Vec<Rule> {
    let mut rules = t.rules.clone();
    if t.modal_conversion {
        let mut obligations: Vec<&ModalLiteral> = t
            .rules
            .iter()
            .map(|r| &r.head)
            .chain(t.facts.iter())
            .filter(|h| h.modality == Modality::Obl)
            .collect();
        obligations.sort();
        obligations.dedup();
        for ob in obligations {
            let head = ModalLiteral::perm(ob.literal.clone());
            rules.push(Rule::strict(
                format!("{CONVERSION_PREFIX}{ob}"),
                vec![ob.clone()],
                head,
            ));
        }
    }
    rules
}

/// Superiority of `t`, extended so that the conversion rule for `[O]p`
/// beats every rule that some rule for `[O]p` beats.
pub(crate) fn superiority_with_conversion(t: &Theory) -> Vec<(String, String)> {
    let mut pairs: Vec<(String, String)> = t.superiority.iter().cloned().collect();
    if t.modal_conversion {
        let heads: BTreeMap<&str, &ModalLiteral> = t
            .rules
            .iter()
            .map(|r| (r.label.as_str(), &r.head))
            .collect();
        for (w, l) in &t.superiority {
            if let Some(h) = heads.get(w.as_str()) {
                if h.modality == Modality::Obl {
                    pairs.push((format!("{CONVERSION_PREFIX}{h}"), l.clone()));
                }
            }
        }
        pairs.sort();
        pairs.dedup();
    }
    pairs
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tri {
    Unknown,
    Yes,
    No,
}

impl From<Tri> for Status {
    fn from(t: Tri) -> Self {
        match t {
            Tri::Yes => Status::Proved,
            Tri::No => Status::Disproved,
            Tri::Unknown => Status::Undetermined,
        }
    }
}

/// Computes +Δ/−Δ/+∂/−∂ for every literal of a ground theory.
///
/// Both strengths are computed by iterating the constructive proof
/// conditions until nothing changes; literals caught in dependency cycles
/// stay `Undetermined`. Superiority is checked rule against rule, i.e. each
/// attacker must be beaten by one applicable rule for the conclusion.
/// Variables in a non-ground theory are treated as opaque symbols.
pub fn compute_conclusions(t: &Theory) -> ConclusionSet {
    let idx = Index::build(t);
    let (delta, partial) = fixpoint(&idx);
    let entries = idx
        .lits
        .iter()
        .enumerate()
        .map(|(i, l)| {
            (
                l.clone(),
                Conclusion {
                    delta: delta[i].into(),
                    partial: partial[i].into(),
                },
            )
        })
        .collect();
    ConclusionSet::from_entries(entries)
}

/// Literals whose status may change once the status of each literal is
/// known: heads of rules using it, literals it attacks through rule heads,
/// and literals listing it in their conflict set.
fn dependents(idx: &Index) -> Vec<Vec<usize>> {
    let n = idx.lits.len();
    let mut attacked_by_head: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (q, cs) in idx.conflicts.iter().enumerate() {
        for &c in cs {
            attacked_by_head[c].push(q);
        }
    }
    let mut deps: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in &idx.rules {
        for &b in &r.body {
            deps[b].push(r.head);
            deps[b].extend(attacked_by_head[r.head].iter().copied());
        }
    }
    for (c, qs) in attacked_by_head.iter().enumerate() {
        deps[c].extend(qs.iter().copied());
    }
    for d in &mut deps {
        d.sort_unstable();
        d.dedup();
    }
    deps
}

/// Settles literals until no further one can be decided. `step` returns the
/// new status of an unsettled literal, or `Unknown` if it cannot be decided
/// yet; only the dependents of a settled literal are revisited.
fn settle(n: usize, deps: &[Vec<usize>], mut step: impl FnMut(&[Tri], usize) -> Tri) -> Vec<Tri> {
    let mut status = vec![Tri::Unknown; n];
    let mut queued = vec![true; n];
    let mut work: VecDeque<usize> = (0..n).collect();
    while let Some(q) = work.pop_front() {
        queued[q] = false;
        if status[q] != Tri::Unknown {
            continue;
        }
        let next = step(&status, q);
        if next == Tri::Unknown {
            continue;
        }
        status[q] = next;
        for &d in &deps[q] {
            if !queued[d] && status[d] == Tri::Unknown {
                queued[d] = true;
                work.push_back(d);
            }
        }
    }
    status
}

fn fixpoint(idx: &Index) -> (Vec<Tri>, Vec<Tri>) {
    let n = idx.lits.len();
    let deps = dependents(idx);
    let delta = settle(n, &deps, |delta, q| {
        let mut strict = idx.by_head[q]
            .iter()
            .map(|&r| &idx.rules[r])
            .filter(|r| r.kind == RuleKind::Strict);
        if idx.is_fact[q]
            || strict
                .clone()
                .any(|r| r.body.iter().all(|&b| delta[b] == Tri::Yes))
        {
            Tri::Yes
        } else if strict.all(|r| r.body.iter().any(|&b| delta[b] == Tri::No)) {
            Tri::No
        } else {
            Tri::Unknown
        }
    });
    let partial = settle(n, &deps, |partial, q| {
        if plus_partial(idx, &delta, partial, q) {
            Tri::Yes
        } else if minus_partial(idx, &delta, partial, q) {
            Tri::No
        } else {
            Tri::Unknown
        }
    });
    (delta, partial)
}

fn all_body(idx: &Index, status: &[Tri], r: usize, want: Tri) -> bool {
    idx.rules[r].body.iter().all(|&b| status[b] == want)
}

fn any_body(idx: &Index, status: &[Tri], r: usize, want: Tri) -> bool {
    idx.rules[r].body.iter().any(|&b| status[b] == want)
}

fn plus_partial(idx: &Index, delta: &[Tri], partial: &[Tri], q: usize) -> bool {
    if delta[q] == Tri::Yes {
        return true;
    }
    idx.conflicts[q].iter().all(|&c| delta[c] == Tri::No)
        && idx
            .supporters(q)
            .any(|r| all_body(idx, partial, r, Tri::Yes))
        && idx.attackers(q).all(|s| {
            any_body(idx, partial, s, Tri::No)
                || idx
                    .supporters(q)
                    .any(|t| idx.superior.contains(&(t, s)) && all_body(idx, partial, t, Tri::Yes))
        })
}

fn minus_partial(idx: &Index, delta: &[Tri], partial: &[Tri], q: usize) -> bool {
    if delta[q] != Tri::No {
        return false;
    }
    idx.conflicts[q].iter().any(|&c| delta[c] == Tri::Yes)
        || idx
            .supporters(q)
            .all(|r| any_body(idx, partial, r, Tri::No))
        || idx.attackers(q).any(|s| {
            all_body(idx, partial, s, Tri::Yes)
                && idx
                    .supporters(q)
                    .all(|t| !idx.superior.contains(&(t, s)) || any_body(idx, partial, t, Tri::No))
        })
}

/// True iff `c` assigns `tag` to `lit`. Undetermined answers false for both
/// polarities.
pub fn query(c: &ConclusionSet, tag: ProofTag, lit: &ModalLiteral) -> bool {
    let status = c.get(lit).at(tag.strength);
    match tag.polarity {
        Polarity::Plus => status == Status::Proved,
        Polarity::Minus => status == Status::Disproved,
    }
}

/// How a rule stood when the conclusions were reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleStatus {
    pub label: String,
    pub kind: RuleKind,
    pub head: String,
    /// All body literals +∂.
    pub applicable: bool,
    /// Body literals that are not +∂, with their tags.
    pub failed_body: Vec<(String, String)>,
    /// For attackers: the supporting rules that beat it via superiority and
    /// are applicable.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beaten_by: Vec<String>,
    /// For attackers: superiority pairs consulted, as `(winner, loser)`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<(String, String)>,
}

/// Supporting and attacking rules of one literal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LiteralExplanation {
    pub literal: String,
    pub delta: Status,
    pub partial: Status,
    pub is_fact: bool,
    pub supporting: Vec<RuleStatus>,
    pub attacking: Vec<RuleStatus>,
}

/// Explains the status of `lit` in the (ground) theory `t` given the
/// conclusions `c` computed from it.
pub fn explain_literal(t: &Theory, c: &ConclusionSet, lit: &ModalLiteral) -> LiteralExplanation {
    explain_literals(t, c, std::slice::from_ref(lit)).remove(0)
}

/// [`explain_literal`] for several literals at once.
pub fn explain_literals(
    t: &Theory,
    c: &ConclusionSet,
    lits: &[ModalLiteral],
) -> Vec<LiteralExplanation> {
    let rules = effective_rules(t);
    let sup: HashSet<(String, String)> = superiority_with_conversion(t).into_iter().collect();
    let mut by_head: HashMap<&ModalLiteral, Vec<usize>> = HashMap::new();
    for (i, r) in rules.iter().enumerate() {
        by_head.entry(&r.head).or_default().push(i);
    }
    let status_of = |r: &Rule| {
        let failed_body: Vec<(String, String)> = r
            .body
            .iter()
            .filter(|b| c.get(b).partial != Status::Proved)
            .map(|b| (b.to_string(), c.get(b).tags()))
            .collect();
        RuleStatus {
            label: r.label.clone(),
            kind: r.kind,
            head: r.head.to_string(),
            applicable: failed_body.is_empty(),
            failed_body,
            beaten_by: Vec::new(),
            comparisons: Vec::new(),
        }
    };
    lits.iter()
        .map(|lit| {
            let with_head = |h: &ModalLiteral| by_head.get(h).into_iter().flatten().copied();
            let supporting_rules: Vec<&Rule> = with_head(lit)
                .map(|i| &rules[i])
                .filter(|r| r.supports())
                .collect();
            let supporting: Vec<RuleStatus> =
                supporting_rules.iter().map(|r| status_of(r)).collect();
            let conflicts = conflict_set(lit);
            let mut attackers: Vec<usize> = conflicts.iter().flat_map(&with_head).collect();
            attackers.sort_unstable();
            let attacking = attackers
                .into_iter()
                .map(|i| {
                    let s = &rules[i];
                    let mut st = status_of(s);
                    for (t_rule, t_status) in supporting_rules.iter().zip(&supporting) {
                        let pair = (t_rule.label.clone(), s.label.clone());
                        if sup.contains(&pair) {
                            if t_status.applicable {
                                st.beaten_by.push(t_rule.label.clone());
                            }
                            st.comparisons.push(pair);
                        }
                    }
                    st
                })
                .collect();
            let conclusion = c.get(lit);
            LiteralExplanation {
                literal: lit.to_string(),
                delta: conclusion.delta,
                partial: conclusion.partial,
                is_fact: t.facts.contains(lit),
                supporting,
                attacking,
            }
        })
        .collect()
}
