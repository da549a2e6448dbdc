//! Spatial, temporal and abstraction reduction of a dataset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::time::bucket_start;
use super::{Dataset, Metric, Reading, Scalar};
use crate::tduo::{
    AbstractionLevel, DataItem, EntityAttribute, EntityId, EntityMetadata, SpatialLevel,
    TemporalLevel,
};

/// Levels at which data is released. `any` means no reduction on that axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransformSpec {
    pub spatial: SpatialLevel,
    pub temporal: TemporalLevel,
    pub abstraction: AbstractionLevel,
}

impl TransformSpec {
    pub fn new(
        spatial: SpatialLevel,
        temporal: TemporalLevel,
        abstraction: AbstractionLevel,
    ) -> Self {
        Self {
            spatial,
            temporal,
            abstraction,
        }
    }
}

/// Half-open time interval `[start, end)` in seconds since the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl Window {
    pub fn new(start: i64, end: i64) -> Self {
        Self { start, end }
    }

    /// The whole non-negative time line.
    pub fn all() -> Self {
        Self {
            start: 0,
            end: i64::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub metric: Metric,
    /// Street, zone or entity id, depending on the spatial level.
    pub unit: String,
    pub bucket: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats<T> {
    pub key: GroupKey,
    pub count: usize,
    pub mean: T,
    pub min: T,
    pub max: T,
}

fn unit_of<T>(r: &Reading<T>, level: SpatialLevel) -> &str {
    match level {
        SpatialLevel::Street => &r.street,
        SpatialLevel::Zone => &r.zone,
        SpatialLevel::Any => &r.entity.id,
    }
}

/// Groups the readings in `window` by metric, spatial unit and time bucket
/// and summarizes each group. Groups are ordered by key.
pub fn group<T: Scalar>(
    d: &Dataset<T>,
    spatial: SpatialLevel,
    temporal: TemporalLevel,
    window: Window,
) -> Vec<GroupStats<T>> {
    let mut acc: BTreeMap<GroupKey, (usize, T, T, T)> = BTreeMap::new();
    for r in d.window(window.start, window.end) {
        let key = GroupKey {
            metric: r.metric,
            unit: unit_of(r, spatial).to_string(),
            bucket: bucket_start(r.timestamp, temporal),
        };
        let e = acc
            .entry(key)
            .or_insert((0, T::zero(), T::infinity(), T::neg_infinity()));
        e.0 += 1;
        e.1 = e.1 + r.value;
        e.2 = e.2.min(r.value);
        e.3 = e.3.max(r.value);
    }
    acc.into_iter()
        .map(|(key, (count, sum, min, max))| GroupStats {
            key,
            count,
            mean: sum / T::from_usize(count).expect("count fits the scalar type"),
            min,
            max,
        })
        .collect()
}

fn attr(name: &str, kind: &str, value: String, meta: (&str, &str)) -> EntityAttribute {
    EntityAttribute::new(
        name,
        kind,
        value,
        vec![EntityMetadata::new(meta.0, "string", meta.1)],
    )
}

fn spec_metadata(spec: &TransformSpec, window: Window) -> Vec<EntityMetadata> {
    vec![
        EntityMetadata::new("spatial", "ScopeLevel", spec.spatial.to_string()),
        EntityMetadata::new("temporal", "ScopeLevel", spec.temporal.to_string()),
        EntityMetadata::new("abstraction", "ScopeLevel", spec.abstraction.to_string()),
        EntityMetadata::new("windowStart", "integer", window.start.to_string()),
        EntityMetadata::new("windowEnd", "integer", window.end.to_string()),
    ]
}

fn location_attrs<T>(r: &Reading<T>, level: SpatialLevel) -> Vec<EntityAttribute> {
    let street = || attr("street", "string", r.street.clone(), ("level", "street"));
    let zone = || attr("zone", "string", r.zone.clone(), ("level", "zone"));
    match level {
        SpatialLevel::Street | SpatialLevel::Any => vec![street(), zone()],
        SpatialLevel::Zone => vec![zone()],
    }
}

/// Releases the readings in `window` at the granularity of `spec`.
///
/// * `detail`: one item per reading, location coarsened to the spatial
///   level and timestamp truncated to the bucket start.
/// * `aggregation`: one item per group with its mean.
/// * `statistic`: one item per group with mean, min, max and count.
///
/// `any` abstraction is treated as `detail`.
pub fn transform<T: Scalar>(d: &Dataset<T>, spec: &TransformSpec, window: Window) -> Vec<DataItem> {
    if window.start >= window.end {
        return Vec::new();
    }
    let domain = spec_metadata(spec, window);
    match spec.abstraction {
        AbstractionLevel::Detail | AbstractionLevel::Any => d
            .window(window.start, window.end)
            .iter()
            .map(|r| {
                let mut attributes = vec![
                    attr(
                        "metric",
                        "string",
                        r.metric.to_string(),
                        ("unit", r.metric.unit()),
                    ),
                    attr(
                        "value",
                        "float",
                        r.value.to_string(),
                        ("unit", r.metric.unit()),
                    ),
                    attr(
                        "timestamp",
                        "integer",
                        bucket_start(r.timestamp, spec.temporal).to_string(),
                        ("format", "unix-seconds"),
                    ),
                ];
                attributes.extend(location_attrs(r, spec.spatial));
                DataItem {
                    entity_id: r.entity.clone(),
                    attribute_domain_name: Some("reading".into()),
                    attributes,
                    domain_metadata: Some(domain.clone()),
                }
            })
            .collect(),
        AbstractionLevel::Aggregation | AbstractionLevel::Statistic => {
            let unit_level = match spec.spatial {
                SpatialLevel::Street => "street",
                SpatialLevel::Zone => "zone",
                SpatialLevel::Any => "entity",
            };
            let statistic = spec.abstraction == AbstractionLevel::Statistic;
            group(d, spec.spatial, spec.temporal, window)
                .into_iter()
                .map(|g| {
                    let unit = g.key.metric.unit();
                    let mut attributes = vec![
                        attr("metric", "string", g.key.metric.to_string(), ("unit", unit)),
                        attr(
                            unit_level,
                            "string",
                            g.key.unit.clone(),
                            ("level", unit_level),
                        ),
                        attr(
                            "bucketStart",
                            "integer",
                            g.key.bucket.to_string(),
                            ("format", "unix-seconds"),
                        ),
                        attr("mean", "float", g.mean.to_string(), ("unit", unit)),
                    ];
                    if statistic {
                        attributes.push(attr("min", "float", g.min.to_string(), ("unit", unit)));
                        attributes.push(attr("max", "float", g.max.to_string(), ("unit", unit)));
                        attributes.push(attr(
                            "count",
                            "integer",
                            g.count.to_string(),
                            ("unit", "readings"),
                        ));
                    }
                    DataItem {
                        entity_id: EntityId::new(
                            format!("{}/{}/{}", g.key.metric, g.key.unit, g.key.bucket),
                            if statistic {
                                "StatisticReading"
                            } else {
                                "AggregatedReading"
                            },
                        ),
                        attribute_domain_name: Some(g.key.metric.to_string()),
                        attributes,
                        domain_metadata: Some(domain.clone()),
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::ingest;
    use super::super::tests::reading;
    use super::*;

    fn value(item: &DataItem, name: &str) -> String {
        item.attribute(name).unwrap().value.clone()
    }

    #[test]
    fn mean_of_two() {
        let (d, _) = ingest(vec![
            reading("s1", Metric::Co2, 3_600, "main", "north", 10.0),
            reading("s2", Metric::Co2, 3_700, "main", "north", 20.0),
        ])
        .unwrap();
        let spec = TransformSpec::new(
            SpatialLevel::Street,
            TemporalLevel::Hourly,
            AbstractionLevel::Aggregation,
        );
        let out = transform(&d, &spec, Window::all());
        assert_eq!(out.len(), 1);
        assert_eq!(value(&out[0], "mean"), "15");
        assert_eq!(value(&out[0], "street"), "main");
        assert_eq!(value(&out[0], "bucketStart"), "3600");
        assert!(out[0].attribute("count").is_none());
        out[0].validate().unwrap();
    }

    #[test]
    fn statistic_reports_four_numbers() {
        let (d, _) = ingest(vec![
            reading("s1", Metric::Voc, 0, "a", "z", 1.0),
            reading("s2", Metric::Voc, 1, "b", "z", 5.0),
            reading("s3", Metric::Voc, 2, "c", "y", 7.0),
        ])
        .unwrap();
        let spec = TransformSpec::new(
            SpatialLevel::Zone,
            TemporalLevel::Weekly,
            AbstractionLevel::Statistic,
        );
        let out = transform(&d, &spec, Window::all());
        assert_eq!(out.len(), 2);
        // Zones sort y before z.
        assert_eq!(value(&out[1], "zone"), "z");
        assert_eq!(value(&out[1], "mean"), "3");
        assert_eq!(value(&out[1], "min"), "1");
        assert_eq!(value(&out[1], "max"), "5");
        assert_eq!(value(&out[1], "count"), "2");
    }

    #[test]
    fn any_detail_is_identity() {
        let rs = vec![
            reading("s1", Metric::Voc, 17, "a", "z", 1.5),
            reading("s2", Metric::Co2, 99, "b", "y", 2.5),
        ];
        let (d, _) = ingest(rs.clone()).unwrap();
        let spec = TransformSpec::new(
            SpatialLevel::Any,
            TemporalLevel::Any,
            AbstractionLevel::Detail,
        );
        let out = transform(&d, &spec, Window::all());
        assert_eq!(out.len(), 2);
        for (item, r) in out.iter().zip(&rs) {
            assert_eq!(item.entity_id, r.entity);
            assert_eq!(value(item, "timestamp"), r.timestamp.to_string());
            assert_eq!(value(item, "street"), r.street);
            assert_eq!(value(item, "zone"), r.zone);
            assert_eq!(value(item, "value").parse::<f64>().unwrap(), r.value);
        }
    }

    #[test]
    fn detail_masks_location_and_time() {
        let (d, _) = ingest(vec![reading("s1", Metric::Voc, 3_661, "a", "z", 1.0)]).unwrap();
        let spec = TransformSpec::new(
            SpatialLevel::Zone,
            TemporalLevel::Hourly,
            AbstractionLevel::Detail,
        );
        let out = transform(&d, &spec, Window::all());
        assert!(out[0].attribute("street").is_none());
        assert_eq!(value(&out[0], "timestamp"), "3600");
    }

    #[test]
    fn empty_window() {
        let (d, _) = ingest(vec![reading("s1", Metric::Voc, 5, "a", "z", 1.0)]).unwrap();
        let spec = TransformSpec::new(
            SpatialLevel::Zone,
            TemporalLevel::Hourly,
            AbstractionLevel::Detail,
        );
        assert!(transform(&d, &spec, Window::new(10, 10)).is_empty());
        assert!(transform(&d, &spec, Window::new(6, 100)).is_empty());
    }
}
