use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::util::read_utf8;
use crate::{Error, Result};

/// One recorded exchange in a replay fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub request_hash: String,
    pub response_body: String,
}

/// Recorded responses keyed by request hash.
#[derive(Debug, Clone, Default)]
pub struct ReplayStore {
    entries: HashMap<String, String>,
}

impl ReplayStore {
    pub fn load(path: &Path) -> Result<Self> {
        let content = read_utf8(path)?;
        let mut entries = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ReplayEntry = serde_json::from_str(line).map_err(|e| Error::MalformedFixture {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })?;
            entries.insert(entry.request_hash, entry.response_body);
        }
        Ok(ReplayStore { entries })
    }

    pub fn from_entries(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        ReplayStore {
            entries: entries.into_iter().map(|e| (e.request_hash, e.response_body)).collect(),
        }
    }

    pub fn get(&self, hash: &str) -> Result<&str> {
        self.entries
            .get(hash)
            .map(String::as_str)
            .ok_or_else(|| Error::UnrecordedRequest(hash.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Serialises entries as a replay fixture, one JSON object per line.
pub fn write_replay_fixture(path: &Path, entries: &[ReplayEntry]) -> Result<()> {
    let mut buf = String::new();
    for e in entries {
        buf.push_str(&serde_json::to_string(e)?);
        buf.push('\n');
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
