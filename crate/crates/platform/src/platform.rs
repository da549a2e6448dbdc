//! Platform state and the request lifecycle.
//!
//! Data directory layout:
//!
//! ```text
//! policies/<slug>.xml   one usage policy per file
//! readings.jsonl        the dataset, one reading per line
//! usage.ledger          the usage ledger (unless configured elsewhere)
//! ```
//!
//! A data directory without a `policies/` subdirectory is seeded with the
//! three smart-city policies on first open.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, PoisonError, RwLock, RwLockReadGuard, RwLockWriteGuard};

use chrono::Utc;
use serde::{Deserialize, Serialize};
use tdu_core::compiler::{compile_policy, detect_conflicts, policy_slug, ConflictReport};
use tdu_core::data::{read_readings, transform, DatasetFile, TransformSpec, Window};
use tdu_core::dl::ModalLiteral;
use tdu_core::enforcement::{
    actor_fact, ConsumerRequest, Decision, Enforcer, TargetSelector, DEFAULT_ACTOR,
};
use tdu_core::ledger::{HistoryFilter, Ledger, UsageRecord};
use tdu_core::scenario;
use tdu_core::tduo::{
    parse_usage_policy, serialize_usage_policy, sniff_format, ActorClass, DataItem, Format,
    UsagePolicy,
};
use tdu_core::Dataset;

use crate::{Config, PlatformError};

/// A consumer request plus the time window it asks about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Query {
    #[serde(flatten)]
    pub request: ConsumerRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

impl From<ConsumerRequest> for Query {
    fn from(request: ConsumerRequest) -> Self {
        Self {
            request,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryResponse {
    /// Id of the ledger record written for this decision.
    pub record_id: u64,
    pub decision: Decision,
    /// Released data; empty unless granted.
    pub items: Vec<DataItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PolicySummary {
    pub name: String,
    pub rules: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IngestSummary {
    pub accepted: usize,
    pub duplicates: usize,
    /// Readings in the dataset afterwards.
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Status {
    pub status: String,
    pub policies: usize,
    pub readings: usize,
    pub records: usize,
}

struct Registry {
    /// Policy and its file name, by policy name.
    policies: BTreeMap<String, (UsagePolicy, String)>,
    enforcer: Arc<Enforcer>,
}

struct Store {
    file: DatasetFile,
    dataset: Dataset,
}

/// Policies, data and usage ledger of one data directory.
///
/// Requests are evaluated concurrently against a snapshot of the compiled
/// policies; registering a policy swaps in a new snapshot.
pub struct Platform {
    config: Config,
    facts: BTreeSet<ModalLiteral>,
    registry: RwLock<Registry>,
    store: RwLock<Store>,
    ledger: Ledger,
}

impl std::fmt::Debug for Platform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Platform")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

fn data_dir_error(path: &Path) -> impl FnOnce(std::io::Error) -> PlatformError + '_ {
    move |source| PlatformError::DataDir {
        path: path.display().to_string(),
        source,
    }
}

fn load_policies(dir: &Path) -> Result<BTreeMap<String, (UsagePolicy, String)>, PlatformError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(data_dir_error(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(data_dir_error(dir))?;
    files.retain(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("xml" | "json")));
    files.sort();
    let mut out = BTreeMap::new();
    for path in files {
        let bytes = fs::read(&path)?;
        let policy = parse_usage_policy(&bytes, sniff_format(&bytes))
            .map_err(|e| PlatformError::Invalid(format!("policy file {}: {e}", path.display())))?;
        let file = path
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        if out.insert(policy.name.clone(), (policy, file)).is_some() {
            return Err(PlatformError::Invalid(format!(
                "policy file {} repeats an earlier policy name",
                path.display()
            )));
        }
    }
    Ok(out)
}

fn build_enforcer(
    policies: &BTreeMap<String, (UsagePolicy, String)>,
    modal_conversion: bool,
) -> Result<Enforcer, PlatformError> {
    let list: Vec<UsagePolicy> = policies.values().map(|(p, _)| p.clone()).collect();
    Ok(Enforcer::with_options(
        &list,
        DEFAULT_ACTOR,
        modal_conversion,
    )?)
}

/// Writes `contents` to `path` through a temporary file and a rename.
fn write_atomically(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::File::open(&tmp)?.sync_all()?;
    fs::rename(&tmp, path)
}

impl Platform {
    /// Opens (creating if needed) the data directory and ledger of
    /// `config`.
    pub fn open(config: Config) -> Result<Self, PlatformError> {
        let dir = config.data_dir.clone();
        fs::create_dir_all(&dir).map_err(data_dir_error(&dir))?;
        let policy_dir = config.policy_dir();
        if !policy_dir.exists() {
            fs::create_dir_all(&policy_dir).map_err(data_dir_error(&policy_dir))?;
            for p in scenario::policies() {
                let file = policy_dir.join(format!("{}.xml", policy_slug(&p.name)));
                write_atomically(&file, &serialize_usage_policy(&p, Format::Xml))?;
            }
        }
        let policies = load_policies(&policy_dir)?;
        let enforcer = build_enforcer(&policies, config.modal_conversion)?;
        let (file, dataset) = DatasetFile::open(config.readings_path())?;
        let ledger = Ledger::open(config.ledger_path())?;
        let facts = config
            .actors
            .iter()
            .map(|(s, c)| actor_fact(s, *c))
            .collect();
        Ok(Self {
            config,
            facts,
            registry: RwLock::new(Registry {
                policies,
                enforcer: Arc::new(enforcer),
            }),
            store: RwLock::new(Store { file, dataset }),
            ledger,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    fn registry(&self) -> RwLockReadGuard<'_, Registry> {
        self.registry.read().unwrap_or_else(PoisonError::into_inner)
    }

    fn registry_mut(&self) -> RwLockWriteGuard<'_, Registry> {
        self.registry
            .write()
            .unwrap_or_else(PoisonError::into_inner)
    }

    fn store(&self) -> RwLockReadGuard<'_, Store> {
        self.store.read().unwrap_or_else(PoisonError::into_inner)
    }

    fn store_mut(&self) -> RwLockWriteGuard<'_, Store> {
        self.store.write().unwrap_or_else(PoisonError::into_inner)
    }

    /// The compiled policies requests are currently decided against.
    pub fn enforcer(&self) -> Arc<Enforcer> {
        self.registry().enforcer.clone()
    }

    /// The first registered subject of class `class`, by name.
    pub fn subject_of(&self, class: ActorClass) -> Option<&str> {
        self.config
            .actors
            .iter()
            .find(|(_, c)| **c == class)
            .map(|(s, _)| s.as_str())
    }

    /// Registers `policy`, replacing any policy of the same name.
    pub fn add_policy(&self, policy: UsagePolicy) -> Result<PolicySummary, PlatformError> {
        policy.validate()?;
        compile_policy(&policy, DEFAULT_ACTOR)?;
        let mut registry = self.registry_mut();
        let file = match registry.policies.get(&policy.name) {
            Some((_, f)) => f.clone(),
            None => {
                let slug = policy_slug(&policy.name);
                let taken: BTreeSet<&str> = registry
                    .policies
                    .values()
                    .map(|(_, f)| f.as_str())
                    .collect();
                (1..)
                    .map(|i| match i {
                        1 => format!("{slug}.xml"),
                        _ => format!("{slug}_{i}.xml"),
                    })
                    .find(|f| !taken.contains(f.as_str()))
                    .expect("unbounded candidates")
            }
        };
        let mut next = registry.policies.clone();
        next.insert(policy.name.clone(), (policy.clone(), file.clone()));
        let enforcer = build_enforcer(&next, self.config.modal_conversion)?;
        let path = self.config.policy_dir().join(&file);
        write_atomically(&path, &serialize_usage_policy(&policy, Format::Xml))?;
        registry.policies = next;
        registry.enforcer = Arc::new(enforcer);
        Ok(PolicySummary {
            name: policy.name.clone(),
            rules: policy.rules.len(),
            file,
        })
    }

    /// Parses a policy document (XML or JSON) and registers it.
    pub fn add_policy_document(&self, document: &[u8]) -> Result<PolicySummary, PlatformError> {
        self.add_policy(parse_usage_policy(document, sniff_format(document))?)
    }

    pub fn policies(&self) -> Vec<UsagePolicy> {
        self.registry()
            .policies
            .values()
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn policy_summaries(&self) -> Vec<PolicySummary> {
        self.registry()
            .policies
            .values()
            .map(|(p, f)| PolicySummary {
                name: p.name.clone(),
                rules: p.rules.len(),
                file: f.clone(),
            })
            .collect()
    }

    /// Unordered clashing rules among the registered policies.
    pub fn check_policies(&self) -> ConflictReport {
        detect_conflicts(self.enforcer().theory())
    }

    /// Imports readings in CSV form. Readings already present are skipped.
    pub fn ingest_csv(&self, csv: &[u8]) -> Result<IngestSummary, PlatformError> {
        let readings = read_readings(csv)?;
        let mut store = self.store_mut();
        let report = store.dataset.insert(readings)?;
        if let Err(e) = store.file.append(&report.accepted) {
            // Keep memory in line with what reached the disk.
            if let Ok((file, dataset)) = DatasetFile::open(self.config.readings_path()) {
                *store = Store { file, dataset };
            }
            return Err(e.into());
        }
        Ok(IngestSummary {
            accepted: report.accepted.len(),
            duplicates: report.duplicates.len(),
            total: store.dataset.len(),
        })
    }

    pub fn reading_count(&self) -> usize {
        self.store().dataset.len()
    }

    /// Readings of `target` in `window`, released at `spec`. No policy is
    /// consulted.
    pub fn transform(
        &self,
        spec: &TransformSpec,
        window: Window,
        target: &TargetSelector,
    ) -> Vec<DataItem> {
        let store = self.store();
        if *target == TargetSelector::default() {
            transform(&store.dataset, spec, window)
        } else {
            let selected = store.dataset.select(|r| target.matches(&r.entity));
            transform(&selected, spec, window)
        }
    }

    /// Decides a request, releases the data it is granted and records the
    /// transaction in the ledger, granted or not.
    pub fn query(&self, q: &Query) -> Result<QueryResponse, PlatformError> {
        let decision = self.enforcer().evaluate(&q.request, &self.facts)?;
        let items = match &decision.effective_constraints {
            Some(spec) => {
                self.transform(spec, q.window.unwrap_or(Window::all()), &q.request.target)
            }
            None => Vec::new(),
        };
        let record = UsageRecord::from_decision(&decision, items.len() as u64, Utc::now());
        let record_id = self.ledger.append(record)?;
        Ok(QueryResponse {
            record_id,
            decision,
            items,
        })
    }

    pub fn history(&self, filter: &HistoryFilter) -> Vec<UsageRecord> {
        self.ledger.history(filter)
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn status(&self) -> Status {
        Status {
            status: "ok".into(),
            policies: self.registry().policies.len(),
            readings: self.reading_count(),
            records: self.ledger.len(),
        }
    }
}
