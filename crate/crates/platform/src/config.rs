//! Platform configuration, read from a single TOML file:
//!
//! ```toml
//! port = 8080
//! data-dir = "tdu-data"
//! ledger-path = "tdu-data/usage.ledger"   # optional
//! modal-conversion = true
//!
//! [actors]
//! owner = "DO"
//! city = "MA"
//! acme = "CO"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tdu_core::scenario;
use tdu_core::tduo::ActorClass;

use crate::PlatformError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct Config {
    pub port: u16,
    pub data_dir: PathBuf,
    /// Defaults to `usage.ledger` inside the data directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger_path: Option<PathBuf>,
    pub modal_conversion: bool,
    /// Registered subjects and their actor classes.
    pub actors: BTreeMap<String, ActorClass>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            port: 8080,
            data_dir: PathBuf::from("tdu-data"),
            ledger_path: None,
            modal_conversion: true,
            actors: scenario::SUBJECTS
                .iter()
                .map(|(s, c)| (s.to_string(), *c))
                .collect(),
        }
    }
}

impl Config {
    /// A default configuration rooted at `data_dir`.
    pub fn with_data_dir(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            ..Self::default()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlatformError> {
        let path = path.as_ref();
        let err = |message: String| PlatformError::Config {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::parse(&text).map_err(|e| match e {
            PlatformError::Config { message, .. } => err(message),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, PlatformError> {
        let config: Config = toml::from_str(text).map_err(|e| PlatformError::Config {
            path: "<inline>".into(),
            message: e.to_string(),
        })?;
        if let Some(s) = config.actors.keys().find(|s| s.trim().is_empty()) {
            return Err(PlatformError::Config {
                path: "<inline>".into(),
                message: format!("empty actor subject {s:?}"),
            });
        }
        Ok(config)
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.ledger_path
            .clone()
            .unwrap_or_else(|| self.data_dir.join("usage.ledger"))
    }

    pub fn policy_dir(&self) -> PathBuf {
        self.data_dir.join("policies")
    }

    pub fn readings_path(&self) -> PathBuf {
        self.data_dir.join("readings.jsonl")
    }
}
