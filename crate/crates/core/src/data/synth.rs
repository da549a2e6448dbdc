//! Seeded synthetic air-quality readings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Metric, Reading, Scalar};
use crate::tduo::EntityId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub count: usize,
    pub zones: usize,
    pub streets_per_zone: usize,
    /// Timestamps fall in `[start, end)`.
    pub start: i64,
    pub end: i64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        // Four weeks from Monday 2024-01-01.
        Self {
            seed: 1,
            count: 1000,
            zones: 2,
            streets_per_zone: 3,
            start: 1_704_067_200,
            end: 1_704_067_200 + 28 * 86_400,
        }
    }
}

/// Value range per metric, `[low, high)`.
pub fn metric_range(m: Metric) -> (f64, f64) {
    match m {
        Metric::Temperature => (-10.0, 40.0),
        Metric::Humidity => (0.0, 100.0),
        Metric::Co2 => (350.0, 2000.0),
        Metric::Voc => (0.0, 1000.0),
    }
}

pub fn zone_name(z: usize) -> String {
    format!("zone-{z}")
}

pub fn street_name(z: usize, s: usize) -> String {
    format!("street-{z}-{s}")
}

/// One sensor per street. Timestamps are stratified over the span, so they
/// increase with the reading index and (for spans of at least `count`
/// seconds) are distinct. Returns nothing if there are no streets.
pub fn generate_synthetic<T: Scalar>(cfg: &SyntheticConfig) -> Vec<Reading<T>> {
    let streets = cfg.zones * cfg.streets_per_zone;
    if streets == 0 || cfg.count == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let span = (cfg.end - cfg.start).max(1) as f64;
    let step = span / cfg.count as f64;
    (0..cfg.count)
        .map(|i| {
            let s = rng.random_range(0..streets);
            let (z, k) = (s / cfg.streets_per_zone, s % cfg.streets_per_zone);
            let metric = Metric::ALL[rng.random_range(0..Metric::ALL.len())];
            let (lo, hi) = metric_range(metric);
            let offset = (i as f64 + rng.random::<f64>()) * step;
            Reading {
                entity: EntityId::new(format!("sensor-{z}-{k}"), "AirQualitySensor"),
                metric,
                timestamp: cfg.start + (offset.floor() as i64).min(span as i64 - 1),
                street: street_name(z, k),
                zone: zone_name(z),
                value: T::from_f64(rng.random_range(lo..hi)).expect("value representable"),
            }
        })
        .collect()
}
