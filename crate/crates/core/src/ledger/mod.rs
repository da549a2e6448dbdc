//! Usage ledger: one record per enforcement decision, granted or refused.
//!
//! File format: one record per line,
//!
//! ```text
//! <crc32 of json, 8 lowercase hex digits> <json>\n
//! ```
//!
//! Lines are only ever appended. A final line without its newline (an
//! interrupted append) is dropped when the ledger is opened; any other
//! checksum or parse failure is reported as corruption.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enforcement::{Decision, Outcome};
use crate::tduo::{
    AbstractionLevel, ActorClass, DataItem, EntityAttribute, EntityId, EntityMetadata,
    PurposeLevel, SpatialLevel, TemporalLevel,
};

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger {path}, line {line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
    #[error("data item is not a usage record: {0}")]
    NotARecord(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UsageRecord {
    /// Assigned on append, starting at 1.
    pub record_id: u64,
    pub timestamp: DateTime<Utc>,
    pub subject: String,
    pub actor_class: ActorClass,
    pub spatial: SpatialLevel,
    pub temporal: TemporalLevel,
    pub abstraction: AbstractionLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<PurposeLevel>,
    pub outcome: Outcome,
    pub policies: Vec<String>,
    pub items_released: u64,
    pub trace_digest: String,
}

impl UsageRecord {
    /// A record (id still unassigned) describing `d`.
    pub fn from_decision(d: &Decision, items_released: u64, timestamp: DateTime<Utc>) -> Self {
        let r = &d.request;
        Self {
            record_id: 0,
            timestamp,
            subject: r.subject.clone(),
            actor_class: r.actor_class,
            spatial: r.spatial,
            temporal: r.temporal,
            abstraction: r.abstraction,
            purpose: r.purpose,
            outcome: d.outcome,
            policies: d.policies.clone(),
            items_released,
            trace_digest: d.trace.digest(),
        }
    }
}

/// Conjunctive filter; unset fields match everything. The time range is
/// `[from, to)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<DateTime<Utc>>,
}

impl HistoryFilter {
    pub fn matches(&self, r: &UsageRecord) -> bool {
        self.policy.as_ref().is_none_or(|p| r.policies.contains(p))
            && self.subject.as_ref().is_none_or(|s| *s == r.subject)
            && self.outcome.is_none_or(|o| o == r.outcome)
            && self.from.is_none_or(|f| r.timestamp >= f)
            && self.to.is_none_or(|t| r.timestamp < t)
    }
}

fn encode_line(r: &UsageRecord) -> String {
    let json = serde_json::to_string(r).expect("record serializes");
    format!("{:08x} {json}\n", crc32fast::hash(json.as_bytes()))
}

fn decode_line(line: &str) -> Result<UsageRecord, String> {
    let (crc, json) = line.split_once(' ').ok_or("missing checksum separator")?;
    let expected = u32::from_str_radix(crc, 16).map_err(|e| format!("bad checksum field: {e}"))?;
    if crc.len() != 8 || crc32fast::hash(json.as_bytes()) != expected {
        return Err("checksum mismatch".into());
    }
    serde_json::from_str(json).map_err(|e| e.to_string())
}

struct State {
    file: File,
    len: u64,
    records: Vec<UsageRecord>,
}

/// Append-only, checksummed usage ledger. Appends are serialized; reads see
/// a consistent snapshot.
pub struct Ledger {
    path: PathBuf,
    state: Mutex<State>,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger")
            .field("path", &self.path)
            .finish_non_exhaustive()
    }
}

impl Ledger {
    /// Opens or creates the ledger at `path` and loads every record.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LedgerError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;
        let mut records: Vec<UsageRecord> = Vec::new();
        let mut good_len = 0usize;
        let mut rest = text.as_str();
        let mut line_no = 0;
        while !rest.is_empty() {
            line_no += 1;
            let Some(end) = rest.find('\n') else {
                // Interrupted append: drop the torn tail.
                break;
            };
            let line = &rest[..end];
            let record = decode_line(line).map_err(|message| LedgerError::Corrupt {
                path: path.display().to_string(),
                line: line_no,
                message,
            })?;
            let expected = records.last().map_or(1, |r| r.record_id + 1);
            if record.record_id != expected {
                return Err(LedgerError::Corrupt {
                    path: path.display().to_string(),
                    line: line_no,
                    message: format!(
                        "record id {} where {expected} was expected",
                        record.record_id
                    ),
                });
            }
            records.push(record);
            good_len += end + 1;
            rest = &rest[end + 1..];
        }
        if good_len < text.len() {
            file.set_len(good_len as u64)?;
            file.sync_all()?;
        }
        Ok(Self {
            path,
            state: Mutex::new(State {
                file,
                len: good_len as u64,
                records,
            }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Durably appends `record`, assigning the next id, and returns the id.
    /// On failure the file is cut back to its previous length.
    pub fn append(&self, mut record: UsageRecord) -> Result<u64, LedgerError> {
        let mut st = self.state.lock().expect("ledger lock poisoned");
        record.record_id = st.records.last().map_or(1, |r| r.record_id + 1);
        let line = encode_line(&record);
        let written = st
            .file
            .write_all(line.as_bytes())
            .and_then(|_| st.file.sync_data());
        if let Err(e) = written {
            let len = st.len;
            let _ = st.file.set_len(len);
            return Err(e.into());
        }
        st.len += line.len() as u64;
        let id = record.record_id;
        st.records.push(record);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.state
            .lock()
            .expect("ledger lock poisoned")
            .records
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Matching records in id order.
    pub fn history(&self, filter: &HistoryFilter) -> Vec<UsageRecord> {
        let st = self.state.lock().expect("ledger lock poisoned");
        st.records
            .iter()
            .filter(|r| filter.matches(r))
            .cloned()
            .collect()
    }
}

pub const RECORD_ENTITY_TYPE: &str = "UsageRecord";

fn field(name: &str, kind: &str, value: impl ToString) -> EntityAttribute {
    EntityAttribute::new(
        name,
        kind,
        value.to_string(),
        vec![EntityMetadata::new("source", "string", "ledger")],
    )
}

/// The record as a data item, one attribute per field (one `policy`
/// attribute per consulted policy, in order).
pub fn as_data_item(r: &UsageRecord) -> DataItem {
    let mut attributes = vec![
        field("recordId", "integer", r.record_id),
        field(
            "timestamp",
            "dateTime",
            r.timestamp
                .to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true),
        ),
        field("subject", "string", &r.subject),
        field("actorClass", "string", r.actor_class.predicate()),
        field("spatial", "ScopeLevel", r.spatial),
        field("temporal", "ScopeLevel", r.temporal),
        field("abstraction", "ScopeLevel", r.abstraction),
    ];
    if let Some(p) = r.purpose {
        attributes.push(field("purpose", "ScopeLevel", p));
    }
    attributes.push(field(
        "outcome",
        "string",
        match r.outcome {
            Outcome::Granted => "Granted",
            Outcome::Refused => "Refused",
        },
    ));
    for p in &r.policies {
        attributes.push(field("policy", "URI", p));
    }
    attributes.push(field("itemsReleased", "integer", r.items_released));
    attributes.push(field("traceDigest", "string", &r.trace_digest));
    DataItem {
        entity_id: EntityId::new(format!("usage-record-{}", r.record_id), RECORD_ENTITY_TYPE),
        attribute_domain_name: Some("usage".into()),
        attributes,
        domain_metadata: None,
    }
}

/// Inverse of [`as_data_item`].
pub fn from_data_item(item: &DataItem) -> Result<UsageRecord, LedgerError> {
    let bad = |m: String| LedgerError::NotARecord(m);
    if item.entity_id.kind != RECORD_ENTITY_TYPE {
        return Err(bad(format!("entity type `{}`", item.entity_id.kind)));
    }
    let get = |name: &str| {
        item.attribute(name)
            .map(|a| a.value.as_str())
            .ok_or_else(|| bad(format!("missing attribute `{name}`")))
    };
    fn parsed<T: std::str::FromStr>(name: &str, v: &str) -> Result<T, LedgerError>
    where
        T::Err: std::fmt::Display,
    {
        v.parse()
            .map_err(|e: T::Err| LedgerError::NotARecord(format!("attribute `{name}`: {e}")))
    }
    let outcome = match get("outcome")? {
        "Granted" => Outcome::Granted,
        "Refused" => Outcome::Refused,
        other => return Err(bad(format!("outcome `{other}`"))),
    };
    let actor = get("actorClass")?;
    Ok(UsageRecord {
        record_id: parsed("recordId", get("recordId")?)?,
        timestamp: DateTime::parse_from_rfc3339(get("timestamp")?)
            .map_err(|e| bad(format!("attribute `timestamp`: {e}")))?
            .with_timezone(&Utc),
        subject: get("subject")?.to_string(),
        actor_class: ActorClass::from_predicate(actor)
            .ok_or_else(|| bad(format!("actor class `{actor}`")))?,
        spatial: parsed("spatial", get("spatial")?)?,
        temporal: parsed("temporal", get("temporal")?)?,
        abstraction: parsed("abstraction", get("abstraction")?)?,
        purpose: match item.attribute("purpose") {
            Some(a) => Some(parsed("purpose", &a.value)?),
            None => None,
        },
        outcome,
        policies: item
            .attributes
            .iter()
            .filter(|a| a.name == "policy")
            .map(|a| a.value.clone())
            .collect(),
        items_released: parsed("itemsReleased", get("itemsReleased")?)?,
        trace_digest: get("traceDigest")?.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tduo::{parse_data_item, serialize_data_item, Format};
    use chrono::TimeZone;

    pub(crate) fn record(subject: &str, outcome: Outcome, policies: &[&str]) -> UsageRecord {
        UsageRecord {
            record_id: 0,
            timestamp: Utc.with_ymd_and_hms(2024, 1, 1, 12, 0, 0).unwrap(),
            subject: subject.into(),
            actor_class: ActorClass::MunicipalAuthority,
            spatial: SpatialLevel::Street,
            temporal: TemporalLevel::Hourly,
            abstraction: AbstractionLevel::Aggregation,
            purpose: None,
            outcome,
            policies: policies.iter().map(|s| s.to_string()).collect(),
            items_released: 0,
            trace_digest: "ab".repeat(32),
        }
    }

    #[test]
    fn ids_start_at_one_and_continue_after_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.log");
        let l = Ledger::open(&path).unwrap();
        assert!(l.is_empty());
        assert_eq!(
            l.append(record("city", Outcome::Granted, &["p"])).unwrap(),
            1
        );
        assert_eq!(
            l.append(record("acme", Outcome::Refused, &["p"])).unwrap(),
            2
        );
        let before = std::fs::read(&path).unwrap();
        drop(l);
        let l = Ledger::open(&path).unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l.append(record("x", Outcome::Refused, &[])).unwrap(), 3);
        let after = std::fs::read(&path).unwrap();
        assert!(after.starts_with(&before));
    }

    #[test]
    fn filters() {
        let dir = tempfile::tempdir().unwrap();
        let l = Ledger::open(dir.path().join("l")).unwrap();
        assert!(l.history(&HistoryFilter::default()).is_empty());
        l.append(record("city", Outcome::Granted, &["urn:ma"]))
            .unwrap();
        l.append(record("acme", Outcome::Refused, &["urn:co", "urn:ma"]))
            .unwrap();
        let refused = l.history(&HistoryFilter {
            outcome: Some(Outcome::Refused),
            ..Default::default()
        });
        assert_eq!(refused.len(), 1);
        assert_eq!(refused[0].subject, "acme");
        let ma = l.history(&HistoryFilter {
            policy: Some("urn:ma".into()),
            ..Default::default()
        });
        assert_eq!(ma.iter().map(|r| r.record_id).collect::<Vec<_>>(), [1, 2]);
        let t = Utc.with_ymd_and_hms(2024, 1, 1, 12, 0, 0).unwrap();
        let none = l.history(&HistoryFilter {
            to: Some(t),
            ..Default::default()
        });
        assert!(none.is_empty());
        let all = l.history(&HistoryFilter {
            from: Some(t),
            subject: Some("city".into()),
            ..Default::default()
        });
        assert_eq!(all.len(), 1);
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l");
        let l = Ledger::open(&path).unwrap();
        l.append(record("city", Outcome::Granted, &[])).unwrap();
        drop(l);
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("city", "cit1");
        std::fs::write(&path, text).unwrap();
        match Ledger::open(&path) {
            Err(LedgerError::Corrupt {
                line: 1, message, ..
            }) => assert!(message.contains("checksum")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l");
        let l = Ledger::open(&path).unwrap();
        l.append(record("city", Outcome::Granted, &[])).unwrap();
        drop(l);
        let good = std::fs::read(&path).unwrap();
        let mut torn = good.clone();
        torn.extend_from_slice(b"0000abcd {\"recordId\":2");
        std::fs::write(&path, &torn).unwrap();
        let l = Ledger::open(&path).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(std::fs::read(&path).unwrap(), good);
        assert_eq!(l.append(record("x", Outcome::Granted, &[])).unwrap(), 2);
    }

    #[test]
    fn concurrent_appends_get_distinct_ordered_ids() {
        let dir = tempfile::tempdir().unwrap();
        let l = std::sync::Arc::new(Ledger::open(dir.path().join("l")).unwrap());
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let l = l.clone();
                std::thread::spawn(move || {
                    (0..5)
                        .map(|_| {
                            l.append(record(&format!("s{i}"), Outcome::Granted, &[]))
                                .unwrap()
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut ids: Vec<u64> = handles
            .into_iter()
            .flat_map(|h| h.join().unwrap())
            .collect();
        ids.sort();
        assert_eq!(ids, (1..=40).collect::<Vec<_>>());
        let reloaded = Ledger::open(l.path()).unwrap();
        assert_eq!(
            reloaded.history(&HistoryFilter::default()),
            l.history(&HistoryFilter::default())
        );
    }

    #[test]
    fn data_item_round_trip() {
        let mut r = record(
            "city",
            Outcome::Refused,
            &["urn:tdu:policy:ma", "urn:tdu:policy:co"],
        );
        r.record_id = 7;
        r.purpose = Some(PurposeLevel::CommercialUse);
        r.timestamp = Utc::now();
        let item = as_data_item(&r);
        assert_eq!(item.entity_id.kind, "UsageRecord");
        assert_eq!(item.attribute("itemsReleased").unwrap().value, "0");
        item.validate().unwrap();
        for format in [Format::Xml, Format::Json] {
            let text = serialize_data_item(&item, format);
            let back = parse_data_item(text.as_bytes(), format).unwrap();
            assert_eq!(from_data_item(&back).unwrap(), r);
        }
        let mut other = item.clone();
        other.entity_id.kind = "Sensor".into();
        assert!(from_data_item(&other).is_err());
    }
}
