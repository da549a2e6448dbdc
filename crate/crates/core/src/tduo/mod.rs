//! Data items, conditions, operators and usage policies.
//!
//! XML is the normative encoding (one element per field, following the
//! `DataItem`, `Condition`, `Operator` and `UsagePolicy` document types).
//! JSON mirrors it field for field.

mod scope;
mod xml;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scope::{
    subsumes, AbstractionLevel, ActorClass, Dimension, Granularity, PurposeLevel, ScopeValue,
    SpatialLevel, TemporalLevel,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("missing required element `{0}`")]
    MissingElement(String),
    #[error("unknown element `{element}` inside `{parent}`")]
    UnknownElement { parent: String, element: String },
    #[error("element `{0}` may appear only once")]
    DuplicateElement(String),
    #[error("unknown value `{value}` in `{element}`")]
    UnknownScopeValue { element: String, value: String },
    #[error("`Operator` must set exactly one of Obligation, Forbidden, Permission (found {0})")]
    OperatorCount(usize),
    #[error("`{0}` must not be empty")]
    Empty(String),
    #[error("`{value}` is not a value of the {dimension:?} dimension")]
    DimensionMismatch { value: String, dimension: Dimension },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Xml,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityId {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: String,
}

impl EntityId {
    pub fn new(id: impl Into<String>, kind: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: kind.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityMetadata {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub value: String,
}

impl EntityMetadata {
    pub fn new(name: impl Into<String>, kind: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: kind.into(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityAttribute {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub value: String,
    /// At least one entry.
    pub metadata: Vec<EntityMetadata>,
}

impl EntityAttribute {
    pub fn new(
        name: impl Into<String>,
        kind: impl Into<String>,
        value: impl Into<String>,
        metadata: Vec<EntityMetadata>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: kind.into(),
            value: value.into(),
            metadata,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DataItem {
    pub entity_id: EntityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_domain_name: Option<String>,
    pub attributes: Vec<EntityAttribute>,
    /// Metadata applying to every attribute of the domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_metadata: Option<Vec<EntityMetadata>>,
}

impl DataItem {
    pub fn new(entity_id: EntityId) -> Self {
        Self {
            entity_id,
            attribute_domain_name: None,
            attributes: Vec::new(),
            domain_metadata: None,
        }
    }

    pub fn attribute(&self, name: &str) -> Option<&EntityAttribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.entity_id.id.is_empty() {
            return Err(ModelError::Empty("Id".into()));
        }
        if self.entity_id.kind.is_empty() {
            return Err(ModelError::Empty("Type".into()));
        }
        for a in &self.attributes {
            if a.metadata.is_empty() {
                return Err(ModelError::MissingElement("EntityMetadata".into()));
            }
        }
        let all_meta = self
            .attributes
            .iter()
            .flat_map(|a| &a.metadata)
            .chain(self.domain_metadata.iter().flatten());
        for m in all_meta {
            if m.name.is_empty() {
                return Err(ModelError::Empty("EntityMetadata/Name".into()));
            }
        }
        Ok(())
    }
}

/// Scope restrictions of one policy rule. Each field is a set of levels;
/// an empty set means the element is absent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Condition {
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub temporality: BTreeSet<TemporalLevel>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub spatiality: BTreeSet<SpatialLevel>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub abstraction: BTreeSet<AbstractionLevel>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub actor: BTreeSet<ActorClass>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub purpose: BTreeSet<PurposeLevel>,
}

impl Condition {
    pub fn is_empty(&self) -> bool {
        self.temporality.is_empty()
            && self.spatiality.is_empty()
            && self.abstraction.is_empty()
            && self.actor.is_empty()
            && self.purpose.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeonticOperator {
    Obligation,
    Forbidden,
    Permission,
}

impl DeonticOperator {
    pub const ALL: [DeonticOperator; 3] = [
        DeonticOperator::Obligation,
        DeonticOperator::Forbidden,
        DeonticOperator::Permission,
    ];

    pub fn xml_name(self) -> &'static str {
        match self {
            DeonticOperator::Obligation => "Obligation",
            DeonticOperator::Forbidden => "Forbidden",
            DeonticOperator::Permission => "Permission",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicyRule {
    pub operator: DeonticOperator,
    #[serde(default)]
    pub conditions: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UsagePolicy {
    /// Policy URI.
    pub name: String,
    #[serde(default)]
    pub rules: Vec<PolicyRule>,
}

impl UsagePolicy {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.name.trim().is_empty() {
            return Err(ModelError::Empty("Name".into()));
        }
        if self
            .rules
            .iter()
            .flat_map(|r| &r.conditions)
            .any(Condition::is_empty)
        {
            return Err(ModelError::Empty("Condition".into()));
        }
        Ok(())
    }

    /// True when some rule restricts the purpose dimension.
    pub fn mentions_purpose(&self) -> bool {
        self.rules
            .iter()
            .flat_map(|r| &r.conditions)
            .any(|c| !c.purpose.is_empty())
    }
}

pub fn parse_data_item(document: &[u8], format: Format) -> Result<DataItem, ModelError> {
    let item = match format {
        Format::Xml => xml::parse_data_item(document)?,
        Format::Json => {
            serde_json::from_slice(document).map_err(|e| ModelError::Json(e.to_string()))?
        }
    };
    item.validate()?;
    Ok(item)
}

pub fn serialize_data_item(item: &DataItem, format: Format) -> String {
    match format {
        Format::Xml => xml::write_data_item(item),
        Format::Json => serde_json::to_string_pretty(item).expect("data item serializes"),
    }
}

pub fn parse_usage_policy(document: &[u8], format: Format) -> Result<UsagePolicy, ModelError> {
    let policy = match format {
        Format::Xml => xml::parse_usage_policy(document)?,
        Format::Json => {
            serde_json::from_slice(document).map_err(|e| ModelError::Json(e.to_string()))?
        }
    };
    policy.validate()?;
    Ok(policy)
}

pub fn serialize_usage_policy(policy: &UsagePolicy, format: Format) -> String {
    match format {
        Format::Xml => xml::write_usage_policy(policy),
        Format::Json => serde_json::to_string_pretty(policy).expect("policy serializes"),
    }
}

/// Guesses the encoding from the first non-blank byte.
pub fn sniff_format(document: &[u8]) -> Format {
    match document.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') | Some(b'[') => Format::Json,
        _ => Format::Xml,
    }
}
