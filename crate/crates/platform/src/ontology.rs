//! The vocabulary policies and requests are written in: granularity
//! dimensions with their levels in coarseness order, actor classes and the
//! predicates of compiled rules. It is fixed at build time.

use serde::{Deserialize, Serialize};
use tdu_core::enforcement::REQUEST_PREDICATE;
use tdu_core::tduo::{
    AbstractionLevel, ActorClass, Dimension, Granularity, PurposeLevel, SpatialLevel, TemporalLevel,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DimensionVocabulary {
    pub dimension: Dimension,
    pub predicate: String,
    /// Finest first; `ordered` says whether the order means anything.
    pub levels: Vec<String>,
    pub ordered: bool,
    pub wildcard: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ActorVocabulary {
    pub predicate: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Vocabulary {
    pub dimensions: Vec<DimensionVocabulary>,
    pub actor_classes: Vec<ActorVocabulary>,
    pub request_predicate: String,
    /// Modal prefixes of rule literals.
    pub modalities: Vec<String>,
}

fn dimension<G: Granularity>() -> DimensionVocabulary {
    let all = G::all();
    DimensionVocabulary {
        dimension: G::DIMENSION,
        predicate: G::DIMENSION.predicate().to_string(),
        levels: all
            .iter()
            .filter(|l| !l.is_any())
            .map(|l| l.constant().to_string())
            .collect(),
        ordered: all.iter().any(|l| l.rank().is_some()),
        wildcard: all
            .iter()
            .find(|l| l.is_any())
            .map(|l| l.constant().to_string())
            .unwrap_or_default(),
    }
}

/// The platform vocabulary.
pub fn vocabulary() -> Vocabulary {
    Vocabulary {
        dimensions: vec![
            dimension::<TemporalLevel>(),
            dimension::<SpatialLevel>(),
            dimension::<AbstractionLevel>(),
            dimension::<PurposeLevel>(),
        ],
        actor_classes: ActorClass::ALL
            .iter()
            .map(|a| ActorVocabulary {
                predicate: a.predicate().to_string(),
                name: a.xml_name().to_string(),
            })
            .collect(),
        request_predicate: REQUEST_PREDICATE.to_string(),
        modalities: vec!["[O]".into(), "[P]".into()],
    }
}
