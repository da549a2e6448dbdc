//! Sensor readings, datasets and the transforms that realize granted scopes.
//!
//! Everything here is generic over the reading value type; the crate root
//! exports `f64` aliases.

mod io;
mod store;
mod synth;
mod time;
mod transform;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tduo::{DataItem, EntityId, EntityMetadata, UsagePolicy};

pub use io::{read_readings, write_readings, CSV_HEADER};
pub use store::DatasetFile;
pub use synth::{generate_synthetic, metric_range, street_name, zone_name, SyntheticConfig};
pub use time::bucket_start;
pub use transform::{group, transform, GroupKey, GroupStats, TransformSpec, Window};

/// Numeric type of reading values.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + fmt::Display
    + fmt::Debug
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + fmt::Display
        + fmt::Debug
        + Default
        + Send
        + Sync
        + Serialize
        + DeserializeOwned
        + 'static
{
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid reading {reading}: {reason}")]
    InvalidReading { reading: String, reason: String },
    #[error("street `{street}` is mapped to zone `{first}` and to zone `{second}`")]
    ZoneConflict {
        street: String,
        first: String,
        second: String,
    },
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("CSV line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("missing CSV header field `{0}`")]
    MissingHeader(String),
    #[error("dataset file {path}, line {line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Temperature,
    Humidity,
    Co2,
    Voc,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Temperature,
        Metric::Humidity,
        Metric::Co2,
        Metric::Voc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Temperature => "temperature",
            Metric::Humidity => "humidity",
            Metric::Co2 => "co2",
            Metric::Voc => "voc",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::Temperature => "celsius",
            Metric::Humidity => "percent",
            Metric::Co2 => "ppm",
            Metric::Voc => "ppb",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| DataError::UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reading<T> {
    pub entity: EntityId,
    pub metric: Metric,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub street: String,
    pub zone: String,
    pub value: T,
}

/// Identity of a reading within a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReadingKey {
    pub entity: String,
    pub metric: Metric,
    pub timestamp: i64,
}

impl<T: Scalar> Reading<T> {
    pub fn key(&self) -> ReadingKey {
        ReadingKey {
            entity: self.entity.id.clone(),
            metric: self.metric,
            timestamp: self.timestamp,
        }
    }

    fn describe(&self) -> String {
        format!("({}, {}, {})", self.entity.id, self.metric, self.timestamp)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |reason: &str| DataError::InvalidReading {
            reading: self.describe(),
            reason: reason.to_string(),
        };
        if self.timestamp < 0 {
            return Err(bad("negative timestamp"));
        }
        if self.entity.id.is_empty() {
            return Err(bad("empty entity id"));
        }
        if self.street.is_empty() || self.zone.is_empty() {
            return Err(bad("empty street or zone"));
        }
        if !self.value.is_finite() {
            return Err(bad("value is not finite"));
        }
        Ok(())
    }
}

/// Result of adding readings to a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport<T> {
    /// Readings added, in input order.
    pub accepted: Vec<Reading<T>>,
    /// Keys skipped because an earlier reading had the same key.
    pub duplicates: Vec<ReadingKey>,
}

/// Readings ordered by timestamp, then entity id, then metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    readings: Vec<Reading<T>>,
    keys: HashSet<ReadingKey>,
    zones: BTreeMap<String, String>,
}

impl<T> Default for Dataset<T> {
    fn default() -> Self {
        Self {
            readings: Vec::new(),
            keys: HashSet::new(),
            zones: BTreeMap::new(),
        }
    }
}

fn order_key<T>(r: &Reading<T>) -> (i64, &str, Metric) {
    (r.timestamp, r.entity.id.as_str(), r.metric)
}

impl<T: Scalar> Dataset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds readings, keeping the first of any readings sharing a key.
    /// Nothing is added when any reading is invalid or a street would map
    /// to two zones.
    pub fn insert(&mut self, readings: Vec<Reading<T>>) -> Result<IngestReport<T>, DataError> {
        let mut zones = self.zones.clone();
        for r in &readings {
            r.validate()?;
            match zones.get(&r.street) {
                Some(z) if *z != r.zone => {
                    return Err(DataError::ZoneConflict {
                        street: r.street.clone(),
                        first: z.clone(),
                        second: r.zone.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    zones.insert(r.street.clone(), r.zone.clone());
                }
            }
        }
        self.zones = zones;
        let mut accepted = Vec::new();
        let mut duplicates = Vec::new();
        for r in readings {
            let key = r.key();
            if self.keys.insert(key.clone()) {
                accepted.push(r);
            } else {
                duplicates.push(key);
            }
        }
        self.readings.extend(accepted.iter().cloned());
        self.readings
            .sort_by(|a, b| order_key(a).cmp(&order_key(b)));
        Ok(IngestReport {
            accepted,
            duplicates,
        })
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn readings(&self) -> &[Reading<T>] {
        &self.readings
    }

    /// Street to zone mapping.
    pub fn zones(&self) -> &BTreeMap<String, String> {
        &self.zones
    }

    /// Readings with `start <= timestamp < end`.
    pub fn window(&self, start: i64, end: i64) -> &[Reading<T>] {
        if start >= end {
            return &[];
        }
        let lo = self.readings.partition_point(|r| r.timestamp < start);
        let hi = self.readings.partition_point(|r| r.timestamp < end);
        &self.readings[lo..hi]
    }

    /// A dataset holding the readings that satisfy `keep`.
    pub fn select(&self, mut keep: impl FnMut(&Reading<T>) -> bool) -> Dataset<T> {
        let readings: Vec<Reading<T>> = self.readings.iter().filter(|r| keep(r)).cloned().collect();
        let keys = readings.iter().map(Reading::key).collect();
        let zones = readings
            .iter()
            .map(|r| (r.street.clone(), r.zone.clone()))
            .collect();
        Dataset {
            readings,
            keys,
            zones,
        }
    }
}

/// Builds a dataset from readings; see [`Dataset::insert`].
pub fn ingest<T: Scalar>(
    readings: Vec<Reading<T>>,
) -> Result<(Dataset<T>, IngestReport<T>), DataError> {
    let mut d = Dataset::new();
    let report = d.insert(readings)?;
    Ok((d, report))
}

/// Name of the domain-metadata entry linking an item to a usage policy.
pub const USAGE_POLICY_METADATA: &str = "usagePolicy";

/// Attaches the policy URI to the item's domain metadata (once).
pub fn annotate(item: &DataItem, policy: &UsagePolicy) -> DataItem {
    let mut out = item.clone();
    let meta = out.domain_metadata.get_or_insert_with(Vec::new);
    let entry = EntityMetadata::new(USAGE_POLICY_METADATA, "URI", policy.name.clone());
    if !meta.contains(&entry) {
        meta.push(entry);
    }
    out
}
