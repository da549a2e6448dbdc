//! The usage-policy platform: the managers that own vocabulary, policies,
//! data and applications, served over HTTP and driven by the `tdu` CLI.
//!
//! * [`ontology`]: the fixed vocabulary of scope levels, actor classes and
//!   rule predicates (ontology manager).
//! * [`Platform`]: policy registry, dataset and usage ledger on disk, and
//!   the request lifecycle (policy, data and application managers).
//! * [`service`]: the HTTP endpoints.
//! * [`bench`]: trust enforcement time, cold and warm.
//! * [`cli`]: the command line.

pub mod bench;
pub mod cli;
pub mod config;
pub mod ontology;
mod platform;
pub mod service;

use thiserror::Error;

pub use config::Config;
pub use platform::{IngestSummary, Platform, PolicySummary, Query, QueryResponse};

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("data directory {path}: {source}")]
    DataDir {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot listen on port {port}: {source}")]
    Bind { port: u16, source: std::io::Error },
    #[error(transparent)]
    Model(#[from] tdu_core::tduo::ModelError),
    #[error(transparent)]
    Compile(#[from] tdu_core::compiler::CompileError),
    #[error(transparent)]
    Enforcement(#[from] tdu_core::enforcement::EnforcementError),
    #[error(transparent)]
    Data(#[from] tdu_core::data::DataError),
    #[error(transparent)]
    Ledger(#[from] tdu_core::ledger::LedgerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

impl PlatformError {
    /// True when the caller's input, not the platform, is at fault.
    pub fn is_client_error(&self) -> bool {
        use tdu_core::data::DataError;
        use tdu_core::enforcement::EnforcementError;
        match self {
            PlatformError::Model(_) | PlatformError::Compile(_) | PlatformError::Invalid(_) => true,
            PlatformError::Enforcement(e) => !matches!(e, EnforcementError::Dl(_)),
            PlatformError::Data(e) => !matches!(e, DataError::Io(_) | DataError::Corrupt { .. }),
            _ => false,
        }
    }
}
