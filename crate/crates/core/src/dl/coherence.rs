use super::conflict::conflict_set;
use super::{ConclusionSet, ModalLiteral, Status};

/// A pair of conflicting literals that are both +∂.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incoherence {
    pub left: ModalLiteral,
    pub right: ModalLiteral,
    /// Both sides are +Δ: the strict part itself is inconsistent.
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoherenceReport {
    pub violations: Vec<Incoherence>,
}

impl CoherenceReport {
    pub fn is_coherent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Reports every pair `(l, l')` with `l' ∈ conflict_set(l)` where both are
/// +∂. Strict clashes (both +Δ) are reported too and flagged as such.
pub fn is_coherent(c: &ConclusionSet) -> CoherenceReport {
    let mut violations = Vec::new();
    for (lit, concl) in c.iter() {
        if concl.partial != Status::Proved {
            continue;
        }
        for other in conflict_set(lit) {
            // Each unordered pair once.
            if other <= *lit {
                continue;
            }
            let oc = c.get(&other);
            if oc.partial == Status::Proved {
                violations.push(Incoherence {
                    left: lit.clone(),
                    right: other,
                    strict: concl.delta == Status::Proved && oc.delta == Status::Proved,
                });
            }
        }
    }
    CoherenceReport { violations }
}
