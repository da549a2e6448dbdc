//! XML encoding of data items and usage policies.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::Event;
use quick_xml::Reader;

use super::scope::Granularity;
use super::{
    AbstractionLevel, ActorClass, Condition, DataItem, DeonticOperator, EntityAttribute, EntityId,
    EntityMetadata, ModelError, PolicyRule, PurposeLevel, SpatialLevel, TemporalLevel, UsagePolicy,
};

#[derive(Debug, Default)]
struct Node {
    name: String,
    children: Vec<Node>,
    text: String,
}

fn xml_err(e: impl std::fmt::Display) -> ModelError {
    ModelError::Xml(e.to_string())
}

fn parse_tree(document: &[u8]) -> Result<Node, ModelError> {
    let mut reader = Reader::from_reader(document);
    let mut stack: Vec<Node> = Vec::new();
    let mut root: Option<Node> = None;
    let mut buf = Vec::new();
    loop {
        let event = reader.read_event_into(&mut buf).map_err(xml_err)?;
        match event {
            Event::Start(e) => {
                if root.is_some() {
                    return Err(ModelError::Xml("content after the root element".into()));
                }
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                stack.push(Node {
                    name,
                    ..Node::default()
                });
            }
            Event::Empty(e) => {
                let node = Node {
                    name: String::from_utf8_lossy(e.name().as_ref()).into_owned(),
                    ..Node::default()
                };
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None if root.is_none() => root = Some(node),
                    None => return Err(ModelError::Xml("content after the root element".into())),
                }
            }
            Event::End(_) => {
                let node = stack.pop().ok_or_else(|| xml_err("unbalanced end tag"))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => root = Some(node),
                }
            }
            Event::Text(t) => {
                let text = t.xml_content().map_err(xml_err)?;
                match stack.last_mut() {
                    Some(top) => top.text.push_str(&text),
                    None if text.trim().is_empty() => {}
                    None => return Err(xml_err("text outside the root element")),
                }
            }
            Event::CData(t) => {
                let text = t.decode().map_err(xml_err)?;
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&text);
                }
            }
            Event::GeneralRef(r) => {
                let resolved = match r.resolve_char_ref().map_err(xml_err)? {
                    Some(c) => c.to_string(),
                    None => {
                        let name = r.decode().map_err(xml_err)?;
                        resolve_predefined_entity(&name)
                            .ok_or_else(|| xml_err(format!("unknown entity `&{name};`")))?
                            .to_string()
                    }
                };
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&resolved);
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !stack.is_empty() {
        return Err(xml_err(format!(
            "unclosed element `{}`",
            stack[stack.len() - 1].name
        )));
    }
    root.ok_or_else(|| xml_err("empty document"))
}

impl Node {
    fn text(&self) -> String {
        self.text.trim().to_string()
    }

    /// Rejects children not listed in `allowed`.
    fn only(&self, allowed: &[&str]) -> Result<(), ModelError> {
        match self
            .children
            .iter()
            .find(|c| !allowed.contains(&c.name.as_str()))
        {
            Some(c) => Err(ModelError::UnknownElement {
                parent: self.name.clone(),
                element: c.name.clone(),
            }),
            None => Ok(()),
        }
    }

    fn optional(&self, name: &str) -> Result<Option<&Node>, ModelError> {
        let mut found = self.children.iter().filter(|c| c.name == name);
        let first = found.next();
        if found.next().is_some() {
            return Err(ModelError::DuplicateElement(name.into()));
        }
        Ok(first)
    }

    fn required(&self, name: &str) -> Result<&Node, ModelError> {
        self.optional(name)?
            .ok_or_else(|| ModelError::MissingElement(name.into()))
    }

    fn all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Node> + 'a {
        self.children.iter().filter(move |c| c.name == name)
    }
}

fn expect_root<'a>(root: &'a Node, name: &str) -> Result<&'a Node, ModelError> {
    if root.name == name {
        Ok(root)
    } else {
        Err(ModelError::MissingElement(name.into()))
    }
}

pub(super) fn parse_data_item(document: &[u8]) -> Result<DataItem, ModelError> {
    let root = parse_tree(document)?;
    let item = expect_root(&root, "DataItem")?;
    item.only(&["EntityElement"])?;
    let el = item.required("EntityElement")?;
    el.only(&[
        "EntityID",
        "AttributeDomainName",
        "EntityAttributeList",
        "DomainMetadata",
    ])?;

    let id = el.required("EntityID")?;
    id.only(&["Id", "Type"])?;
    let entity_id = EntityId::new(id.required("Id")?.text(), id.required("Type")?.text());

    let attribute_domain_name = el.optional("AttributeDomainName")?.map(Node::text);

    let list = el.required("EntityAttributeList")?;
    list.only(&["EntityAttribute"])?;
    let attributes = list
        .all("EntityAttribute")
        .map(|a| {
            a.only(&["Name", "Type", "EntityValue", "EntityMetadata"])?;
            let metadata = a
                .all("EntityMetadata")
                .map(parse_metadata)
                .collect::<Result<Vec<_>, _>>()?;
            if metadata.is_empty() {
                return Err(ModelError::MissingElement("EntityMetadata".into()));
            }
            Ok(EntityAttribute {
                name: a.required("Name")?.text(),
                kind: a.required("Type")?.text(),
                value: a.required("EntityValue")?.text(),
                metadata,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let domain_metadata = match el.optional("DomainMetadata")? {
        Some(dm) => {
            dm.only(&["EntityMetadata"])?;
            Some(
                dm.all("EntityMetadata")
                    .map(parse_metadata)
                    .collect::<Result<Vec<_>, _>>()?,
            )
        }
        None => None,
    };

    Ok(DataItem {
        entity_id,
        attribute_domain_name,
        attributes,
        domain_metadata,
    })
}

fn parse_metadata(node: &Node) -> Result<EntityMetadata, ModelError> {
    node.only(&["Name", "Type", "Value"])?;
    Ok(EntityMetadata {
        name: node.required("Name")?.text(),
        kind: node.required("Type")?.text(),
        value: node.required("Value")?.text(),
    })
}

pub(super) fn parse_usage_policy(document: &[u8]) -> Result<UsagePolicy, ModelError> {
    let root = parse_tree(document)?;
    let policy = expect_root(&root, "UsagePolicy")?;
    policy.only(&["Name", "Rule"])?;
    let name_node = policy.required("Name")?;
    name_node.only(&["URI"])?;
    let name = match name_node.optional("URI")? {
        Some(uri) => uri.text(),
        None => name_node.text(),
    };
    let rules = policy
        .all("Rule")
        .map(parse_rule)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(UsagePolicy { name, rules })
}

fn parse_rule(rule: &Node) -> Result<PolicyRule, ModelError> {
    rule.only(&["Operator", "Condition"])?;
    let op = rule.optional("Operator")?;
    let operators: Vec<DeonticOperator> = match op {
        Some(op) => {
            op.only(&["Obligation", "Forbidden", "Permission"])?;
            op.children
                .iter()
                .map(|c| {
                    DeonticOperator::ALL
                        .into_iter()
                        .find(|o| o.xml_name() == c.name)
                        .expect("checked by only()")
                })
                .collect()
        }
        None => Vec::new(),
    };
    if operators.len() != 1 {
        return Err(ModelError::OperatorCount(operators.len()));
    }
    let conditions = rule
        .all("Condition")
        .map(parse_condition)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PolicyRule {
        operator: operators[0],
        conditions,
    })
}

fn parse_condition(cond: &Node) -> Result<Condition, ModelError> {
    cond.only(&[
        "Temporality",
        "Spatiality",
        "Abstraction",
        "Actor",
        "Purpose",
    ])?;
    let mut out = Condition {
        temporality: scopes::<TemporalLevel>(cond, "Temporality", "TemporalScope")?,
        spatiality: scopes::<SpatialLevel>(cond, "Spatiality", "SpatialScope")?,
        abstraction: scopes::<AbstractionLevel>(cond, "Abstraction", "AbstractScope")?,
        actor: BTreeSet::new(),
        purpose: scopes::<PurposeLevel>(cond, "Purpose", "PurposeScope")?,
    };
    for group in cond.all("Actor") {
        group.only(&["ActorScope"])?;
        for scope in group.all("ActorScope") {
            for flag in &scope.children {
                let actor = ActorClass::ALL
                    .into_iter()
                    .find(|a| a.xml_name() == flag.name)
                    .ok_or_else(|| ModelError::UnknownScopeValue {
                        element: "ActorScope".into(),
                        value: flag.name.clone(),
                    })?;
                out.actor.insert(actor);
            }
        }
    }
    if out.is_empty() {
        return Err(ModelError::Empty("Condition".into()));
    }
    Ok(out)
}

fn scopes<G: Granularity>(
    cond: &Node,
    group_name: &str,
    scope_name: &str,
) -> Result<BTreeSet<G>, ModelError> {
    let mut out = BTreeSet::new();
    for group in cond.all(group_name) {
        group.only(&[scope_name])?;
        for scope in group.all(scope_name) {
            for flag in &scope.children {
                let level = G::all()
                    .iter()
                    .copied()
                    .find(|l| l.xml_name() == flag.name)
                    .ok_or_else(|| ModelError::UnknownScopeValue {
                        element: scope_name.into(),
                        value: flag.name.clone(),
                    })?;
                out.insert(level);
            }
        }
    }
    Ok(out)
}

struct Out {
    buf: String,
    depth: usize,
}

impl Out {
    fn new() -> Self {
        Self {
            buf: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"),
            depth: 0,
        }
    }

    fn indent(&mut self) {
        for _ in 0..self.depth {
            self.buf.push_str("  ");
        }
    }

    fn open(&mut self, name: &str) {
        self.indent();
        let _ = writeln!(self.buf, "<{name}>");
        self.depth += 1;
    }

    fn close(&mut self, name: &str) {
        self.depth -= 1;
        self.indent();
        let _ = writeln!(self.buf, "</{name}>");
    }

    fn empty(&mut self, name: &str) {
        self.indent();
        let _ = writeln!(self.buf, "<{name}/>");
    }

    fn leaf(&mut self, name: &str, text: &str) {
        self.indent();
        let _ = writeln!(self.buf, "<{name}>{}</{name}>", escape(text));
    }
}

pub(super) fn write_data_item(item: &DataItem) -> String {
    let mut out = Out::new();
    out.open("DataItem");
    out.open("EntityElement");
    out.open("EntityID");
    out.leaf("Id", &item.entity_id.id);
    out.leaf("Type", &item.entity_id.kind);
    out.close("EntityID");
    if let Some(d) = &item.attribute_domain_name {
        out.leaf("AttributeDomainName", d);
    }
    if item.attributes.is_empty() {
        out.empty("EntityAttributeList");
    } else {
        out.open("EntityAttributeList");
        for a in &item.attributes {
            out.open("EntityAttribute");
            out.leaf("Name", &a.name);
            out.leaf("Type", &a.kind);
            out.leaf("EntityValue", &a.value);
            for m in &a.metadata {
                write_metadata(&mut out, m);
            }
            out.close("EntityAttribute");
        }
        out.close("EntityAttributeList");
    }
    match &item.domain_metadata {
        Some(dm) if dm.is_empty() => out.empty("DomainMetadata"),
        Some(dm) => {
            out.open("DomainMetadata");
            for m in dm {
                write_metadata(&mut out, m);
            }
            out.close("DomainMetadata");
        }
        None => {}
    }
    out.close("EntityElement");
    out.close("DataItem");
    out.buf
}

fn write_metadata(out: &mut Out, m: &EntityMetadata) {
    out.open("EntityMetadata");
    out.leaf("Name", &m.name);
    out.leaf("Type", &m.kind);
    out.leaf("Value", &m.value);
    out.close("EntityMetadata");
}

pub(super) fn write_usage_policy(policy: &UsagePolicy) -> String {
    let mut out = Out::new();
    out.open("UsagePolicy");
    out.open("Name");
    out.leaf("URI", &policy.name);
    out.close("Name");
    for rule in &policy.rules {
        out.open("Rule");
        out.open("Operator");
        out.empty(rule.operator.xml_name());
        out.close("Operator");
        for cond in &rule.conditions {
            out.open("Condition");
            write_scopes(
                &mut out,
                "Temporality",
                "TemporalScope",
                cond.temporality.iter().map(|l| l.xml_name()),
            );
            write_scopes(
                &mut out,
                "Spatiality",
                "SpatialScope",
                cond.spatiality.iter().map(|l| l.xml_name()),
            );
            write_scopes(
                &mut out,
                "Abstraction",
                "AbstractScope",
                AbstractionLevel::XML_ORDER
                    .iter()
                    .filter(|l| cond.abstraction.contains(l))
                    .map(|l| l.xml_name()),
            );
            write_scopes(
                &mut out,
                "Actor",
                "ActorScope",
                cond.actor.iter().map(|a| a.xml_name()),
            );
            write_scopes(
                &mut out,
                "Purpose",
                "PurposeScope",
                cond.purpose.iter().map(|l| l.xml_name()),
            );
            out.close("Condition");
        }
        out.close("Rule");
    }
    out.close("UsagePolicy");
    out.buf
}

fn write_scopes<'a>(out: &mut Out, group: &str, scope: &str, flags: impl Iterator<Item = &'a str>) {
    let flags: Vec<&str> = flags.collect();
    if flags.is_empty() {
        return;
    }
    out.open(group);
    out.open(scope);
    for f in flags {
        out.empty(f);
    }
    out.close(scope);
    out.close(group);
}
