use super::{ModalLiteral, Modality};

/// Literals that attack `lit`.
///
/// `p` clashes with `~p`; `[O]p` clashes with `[O]~p` and `[P]~p`; `[P]p`
/// clashes only with `[O]~p`, so `[P]p` and `[P]~p` can hold together. The
/// relation is symmetric.
pub fn conflict_set(lit: &ModalLiteral) -> Vec<ModalLiteral> {
    let comp = lit.literal.complement();
    match lit.modality {
        Modality::Fact => vec![ModalLiteral::fact(comp)],
        Modality::Obl => vec![ModalLiteral::obl(comp.clone()), ModalLiteral::perm(comp)],
        Modality::Perm => vec![ModalLiteral::obl(comp)],
    }
}

pub fn conflicts_with(a: &ModalLiteral, b: &ModalLiteral) -> bool {
    a.literal.atom == b.literal.atom
        && a.literal.negated != b.literal.negated
        && !matches!(
            (a.modality, b.modality),
            (Modality::Perm, Modality::Perm)
                | (Modality::Fact, Modality::Obl | Modality::Perm)
                | (Modality::Obl | Modality::Perm, Modality::Fact)
        )
}
