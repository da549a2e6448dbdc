//! Trust enforcement time (TET): end-to-end latency of one request
//! (decision, data release and ledger append) on the smart-city workload.
//!
//! * `cold`: every request opens the platform from disk first, so policies
//!   are re-parsed, recompiled and re-grounded each time.
//! * `warm`: one open platform answers every request; the workload is run
//!   once untimed beforehand.
//!
//! Results go to a JSON stats file and a tab-separated table with one row
//! per mode (mean with its 95% confidence interval, min and max).

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::statistics::Statistics;
use tdu_core::data::{generate_synthetic, write_readings, SyntheticConfig};
use tdu_core::enforcement::ConsumerRequest;
use tdu_core::tduo::{AbstractionLevel, ActorClass, SpatialLevel, TemporalLevel};

use crate::{Config, Platform, PlatformError, Query};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cold,
    Warm,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Cold => "cold",
            Mode::Warm => "warm",
        }
    }
}

pub const STATS_FILE: &str = "tet_stats.json";
pub const TABLE_FILE: &str = "tet_table.tsv";
pub const STATS_SCHEMA: &str = "tdu-tet/1";
/// Readings in the benchmark dataset.
pub const WORKLOAD_READINGS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchStats {
    pub mode: Mode,
    pub iterations: usize,
    pub mean_ms: f64,
    pub std_dev_ms: f64,
    pub ci95_low_ms: f64,
    pub ci95_high_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub samples_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema: String,
    pub unit: String,
    pub confidence: f64,
    pub workload: Vec<Query>,
    pub runs: Vec<BenchStats>,
}

/// The requests of the smart-city scenario, grants and refusals, one
/// subject per actor class.
pub fn workload() -> Vec<Query> {
    use AbstractionLevel as A;
    use ActorClass as C;
    use SpatialLevel as S;
    use TemporalLevel as T;
    [
        (
            "city",
            C::MunicipalAuthority,
            S::Street,
            T::Hourly,
            A::Aggregation,
        ),
        (
            "city",
            C::MunicipalAuthority,
            S::Street,
            T::Minutely,
            A::Aggregation,
        ),
        (
            "city",
            C::MunicipalAuthority,
            S::Street,
            T::Hourly,
            A::Detail,
        ),
        (
            "acme",
            C::CommercialOperator,
            S::Zone,
            T::Weekly,
            A::Statistic,
        ),
        (
            "acme",
            C::CommercialOperator,
            S::Street,
            T::Hourly,
            A::Detail,
        ),
        ("owner", C::DataOwner, S::Street, T::Hourly, A::Detail),
    ]
    .into_iter()
    .map(|(s, c, sp, t, a)| ConsumerRequest::new(s, c, sp, t, a).into())
    .collect()
}

/// Mean, sample standard deviation and Student-t 95% interval of
/// `samples` (at least two).
pub fn summarize(mode: Mode, samples: Vec<f64>) -> Result<BenchStats, PlatformError> {
    let n = samples.len();
    if n < 2 {
        return Err(PlatformError::Invalid(format!(
            "need at least 2 iterations, got {n}"
        )));
    }
    let mean = samples.iter().mean();
    let sd = samples.iter().std_dev();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| PlatformError::Invalid(e.to_string()))?
        .inverse_cdf(0.975);
    let half = t * sd / (n as f64).sqrt();
    Ok(BenchStats {
        mode,
        iterations: n,
        mean_ms: mean,
        std_dev_ms: sd,
        ci95_low_ms: mean - half,
        ci95_high_ms: mean + half,
        min_ms: samples.iter().copied().fold(f64::INFINITY, f64::min),
        max_ms: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        samples_ms: samples,
    })
}

/// Prepares a benchmark data directory: scenario policies and
/// [`WORKLOAD_READINGS`] synthetic readings.
pub fn prepare(dir: &Path) -> Result<Config, PlatformError> {
    let config = Config::with_data_dir(dir);
    let platform = Platform::open(config.clone())?;
    let readings = generate_synthetic::<f64>(&SyntheticConfig {
        count: WORKLOAD_READINGS,
        ..SyntheticConfig::default()
    });
    let mut csv = Vec::new();
    write_readings(&mut csv, &readings)?;
    platform.ingest_csv(&csv)?;
    Ok(config)
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Times `iterations` requests against the data directory of `config`,
/// cycling through [`workload`].
pub fn bench_tet_in(
    config: &Config,
    iterations: usize,
    mode: Mode,
) -> Result<BenchStats, PlatformError> {
    if iterations < 2 {
        return Err(PlatformError::Invalid(format!(
            "need at least 2 iterations, got {iterations}"
        )));
    }
    let requests = workload();
    let mut samples = Vec::with_capacity(iterations);
    match mode {
        Mode::Cold => {
            for i in 0..iterations {
                let start = Instant::now();
                let platform = Platform::open(config.clone())?;
                platform.query(&requests[i % requests.len()])?;
                samples.push(elapsed_ms(start));
            }
        }
        Mode::Warm => {
            let platform = Platform::open(config.clone())?;
            for q in &requests {
                platform.query(q)?;
            }
            for i in 0..iterations {
                let start = Instant::now();
                platform.query(&requests[i % requests.len()])?;
                samples.push(elapsed_ms(start));
            }
        }
    }
    summarize(mode, samples)
}

/// [`bench_tet_in`] on a fresh temporary data directory.
pub fn bench_tet(iterations: usize, mode: Mode) -> Result<BenchStats, PlatformError> {
    let dir = tempfile::tempdir()?;
    let config = prepare(dir.path())?;
    bench_tet_in(&config, iterations, mode)
}

pub fn report(runs: Vec<BenchStats>) -> BenchReport {
    BenchReport {
        schema: STATS_SCHEMA.into(),
        unit: "ms".into(),
        confidence: 0.95,
        workload: workload(),
        runs,
    }
}

/// Tab-separated table, one row per run.
pub fn table(runs: &[BenchStats]) -> String {
    let mut out =
        String::from("mode\titerations\tmean_ms\tci95_low_ms\tci95_high_ms\tmin_ms\tmax_ms\n");
    for r in runs {
        out.push_str(&format!(
            "{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\n",
            r.mode.name(),
            r.iterations,
            r.mean_ms,
            r.ci95_low_ms,
            r.ci95_high_ms,
            r.min_ms,
            r.max_ms
        ));
    }
    out
}

/// Writes the stats file and the table into `dir`; returns their paths.
pub fn write_report(dir: &Path, runs: &[BenchStats]) -> Result<(PathBuf, PathBuf), PlatformError> {
    std::fs::create_dir_all(dir)?;
    let stats = dir.join(STATS_FILE);
    let tsv = dir.join(TABLE_FILE);
    let json = serde_json::to_string_pretty(&report(runs.to_vec())).expect("report serializes");
    std::fs::write(&stats, json + "\n")?;
    std::fs::write(&tsv, table(runs))?;
    Ok((stats, tsv))
}
