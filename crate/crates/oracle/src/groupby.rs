//! Brute-force reference for the data-plane transforms.
//!
//! Readings are grouped with a plain map over string keys, and time buckets
//! come from proleptic Gregorian day arithmetic rather than a date library.

use std::collections::BTreeMap;

use tdu_core::data::{TransformSpec, Window};
use tdu_core::tduo::{AbstractionLevel, DataItem, SpatialLevel, TemporalLevel};
use tdu_core::Reading;

const DAY: i64 = 86_400;

/// Days since 1970-01-01 of a civil date.
fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = (m + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Civil date `(year, month, day)` of a day count since 1970-01-01.
fn civil_from_days(z: i64) -> (i64, i64, i64) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = yoe + era * 400 + i64::from(m <= 2);
    (y, m, d)
}

/// Start of the UTC calendar bucket holding `ts`; weeks start on Monday.
pub fn bucket(ts: i64, level: TemporalLevel) -> i64 {
    let day = ts.div_euclid(DAY);
    match level {
        TemporalLevel::Any | TemporalLevel::Secondly => ts,
        TemporalLevel::Minutely => ts.div_euclid(60) * 60,
        TemporalLevel::Hourly => ts.div_euclid(3_600) * 3_600,
        TemporalLevel::Daily => day * DAY,
        // 1970-01-01 was a Thursday, three days after a Monday.
        TemporalLevel::Weekly => (day - (day + 3).rem_euclid(7)) * DAY,
        TemporalLevel::Monthly => {
            let (y, m, _) = civil_from_days(day);
            days_from_civil(y, m, 1) * DAY
        }
        TemporalLevel::Yearly => {
            let (y, _, _) = civil_from_days(day);
            days_from_civil(y, 1, 1) * DAY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// `(metric, spatial unit, bucket)`.
pub type Key = (String, String, i64);

fn unit(r: &Reading, level: SpatialLevel) -> String {
    match level {
        SpatialLevel::Street => r.street.clone(),
        SpatialLevel::Zone => r.zone.clone(),
        SpatialLevel::Any => r.entity.id.clone(),
    }
}

fn in_window(r: &Reading, w: Window) -> bool {
    r.timestamp >= w.start && r.timestamp < w.end
}

pub fn brute_force_groups(
    readings: &[Reading],
    spatial: SpatialLevel,
    temporal: TemporalLevel,
    window: Window,
) -> BTreeMap<Key, Stats> {
    let mut values: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    for r in readings.iter().filter(|r| in_window(r, window)) {
        let key = (
            r.metric.to_string(),
            unit(r, spatial),
            bucket(r.timestamp, temporal),
        );
        values.entry(key).or_default().push(r.value);
    }
    values
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by(f64::total_cmp);
            let stats = Stats {
                count: v.len(),
                mean: v.iter().sum::<f64>() / v.len() as f64,
                min: v[0],
                max: v[v.len() - 1],
            };
            (k, stats)
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn attr<'a>(item: &'a DataItem, name: &str) -> Result<&'a str, String> {
    item.attribute(name)
        .map(|a| a.value.as_str())
        .ok_or_else(|| format!("item {} lacks attribute {name}", item.entity_id.id))
}

fn num<T: std::str::FromStr>(item: &DataItem, name: &str) -> Result<T, String> {
    attr(item, name)?
        .parse()
        .map_err(|_| format!("item {}: {name} is not a number", item.entity_id.id))
}

/// Checks `items`, the output of transforming `readings` under `spec` and
/// `window`, against the brute-force groups. Statistics must agree within
/// `tol` relative; counts must agree exactly.
pub fn check_transform(
    readings: &[Reading],
    spec: &TransformSpec,
    window: Window,
    items: &[DataItem],
    tol: f64,
) -> Result<(), String> {
    let selected: Vec<&Reading> = readings.iter().filter(|r| in_window(r, window)).collect();
    if matches!(
        spec.abstraction,
        AbstractionLevel::Detail | AbstractionLevel::Any
    ) {
        if items.len() != selected.len() {
            return Err(format!(
                "{} detail items for {} readings",
                items.len(),
                selected.len()
            ));
        }
        let mut want: Vec<(String, String, String, i64)> = selected
            .iter()
            .map(|r| {
                let loc = if spec.spatial == SpatialLevel::Zone {
                    r.zone.clone()
                } else {
                    r.street.clone()
                };
                (
                    r.entity.id.clone(),
                    r.metric.to_string(),
                    loc,
                    bucket(r.timestamp, spec.temporal),
                )
            })
            .collect();
        let mut got = Vec::new();
        for i in items {
            let loc_name = if spec.spatial == SpatialLevel::Zone {
                "zone"
            } else {
                "street"
            };
            if spec.spatial == SpatialLevel::Zone && i.attribute("street").is_some() {
                return Err(format!("item {} reveals its street", i.entity_id.id));
            }
            got.push((
                i.entity_id.id.clone(),
                attr(i, "metric")?.to_string(),
                attr(i, loc_name)?.to_string(),
                num::<i64>(i, "timestamp")?,
            ));
        }
        want.sort();
        got.sort();
        if want != got {
            return Err("detail items differ from the readings".into());
        }
        let mut want_values: Vec<f64> = selected.iter().map(|r| r.value).collect();
        let mut got_values = items
            .iter()
            .map(|i| num::<f64>(i, "value"))
            .collect::<Result<Vec<_>, _>>()?;
        want_values.sort_by(f64::total_cmp);
        got_values.sort_by(f64::total_cmp);
        return if want_values == got_values {
            Ok(())
        } else {
            Err("detail values differ from the readings".into())
        };
    }

    let expected = brute_force_groups(readings, spec.spatial, spec.temporal, window);
    if items.len() != expected.len() {
        return Err(format!(
            "{} groups, expected {}",
            items.len(),
            expected.len()
        ));
    }
    let unit_name = match spec.spatial {
        SpatialLevel::Street => "street",
        SpatialLevel::Zone => "zone",
        SpatialLevel::Any => "entity",
    };
    let mut total = 0;
    for i in items {
        let key = (
            attr(i, "metric")?.to_string(),
            attr(i, unit_name)?.to_string(),
            num::<i64>(i, "bucketStart")?,
        );
        let want = expected
            .get(&key)
            .ok_or_else(|| format!("unexpected group {key:?}"))?;
        let mean: f64 = num(i, "mean")?;
        if !close(mean, want.mean, tol) {
            return Err(format!("{key:?}: mean {mean} vs {}", want.mean));
        }
        if spec.abstraction == AbstractionLevel::Statistic {
            let (min, max, count): (f64, f64, usize) =
                (num(i, "min")?, num(i, "max")?, num(i, "count")?);
            if !close(min, want.min, tol) || !close(max, want.max, tol) {
                return Err(format!(
                    "{key:?}: range {min}..{max} vs {}..{}",
                    want.min, want.max
                ));
            }
            if count != want.count {
                return Err(format!("{key:?}: count {count} vs {}", want.count));
            }
        }
        total += want.count;
    }
    if total != selected.len() {
        return Err(format!(
            "groups cover {total} of {} readings",
            selected.len()
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn civil_round_trip() {
        for z in [-800_000, -1, 0, 1, 19_723, 19_782, 2_932_896] {
            let (y, m, d) = civil_from_days(z);
            assert_eq!(days_from_civil(y, m, d), z);
        }
        assert_eq!(civil_from_days(0), (1970, 1, 1));
        assert_eq!(days_from_civil(2000, 3, 1), 11_017);
    }

    #[test]
    fn buckets_of_a_wednesday() {
        // 2024-01-03T10:17:42Z.
        let t = 1_704_277_062;
        assert_eq!(bucket(t, TemporalLevel::Hourly), 1_704_276_000);
        assert_eq!(bucket(t, TemporalLevel::Weekly), 1_704_067_200);
        assert_eq!(bucket(t, TemporalLevel::Monthly), 1_704_067_200);
        assert_eq!(bucket(t, TemporalLevel::Yearly), 1_704_067_200);
        // 2024-03-01 (a Friday) lies in the week of Monday 2024-02-26.
        assert_eq!(bucket(1_709_251_200, TemporalLevel::Weekly), 1_708_905_600);
    }
}
