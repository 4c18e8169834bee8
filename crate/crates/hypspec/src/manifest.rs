//! Run manifests embedded in every emitted artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// File name to SHA-256 hex digest.
    pub input_hashes: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub timestamp: String,
}

/// Seconds since the epoch, from `SOURCE_DATE_EPOCH` when set.
pub fn epoch_seconds() -> i64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse::<i64>().ok()) {
        return v;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs() as i64).unwrap_or(0)
}

pub fn timestamp() -> String {
    OffsetDateTime::from_unix_timestamp(epoch_seconds())
        .ok()
        .and_then(|t| t.format(&Rfc3339).ok())
        .unwrap_or_else(|| "1970-01-01T00:00:00Z".to_owned())
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            input_hashes: BTreeMap::new(),
            seed: None,
            tolerances: BTreeMap::new(),
            timestamp: timestamp(),
        }
    }

    pub fn with_input(mut self, path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.input_hashes.insert(name, hex::encode(Sha256::digest(&bytes)));
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_owned(), value);
        self
    }

    /// `# manifest {json}` on one line.
    pub fn comment_line(&self) -> String {
        format!("# manifest {}", serde_json::to_string(self).expect("manifest serializes"))
    }

    /// Recover a manifest from the first `# manifest` line of an artifact.
    pub fn from_artifact(text: &str) -> Option<Self> {
        text.lines().find_map(|l| l.strip_prefix("# manifest ")).and_then(|j| serde_json::from_str(j).ok())
    }
}
