use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::model::EpochLog;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Record of one command run: what went in, what came out, and how long it
/// took. Everything except `wall_clock_seconds` is a pure function of the
/// inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// Named random substreams drawn from `seed`.
    pub substreams: Vec<String>,
    /// SHA-256 fingerprints of the input and output corpora by name.
    pub corpus: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log: Vec<EpochLog>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, MetricsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,
    pub wall_clock_seconds: f64,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        Ok(Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config)?,
            substreams: Vec::new(),
            corpus: BTreeMap::new(),
            log: Vec::new(),
            metrics: BTreeMap::new(),
            protocol: None,
            wall_clock_seconds: 0.0,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path, self.to_json())
    }
}

pub(crate) fn write_file(path: impl AsRef<Path>, text: impl AsRef<[u8]>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
