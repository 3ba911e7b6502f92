use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A stored response, keyed by its request hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request_hash: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub response_body: String,
}

/// On-disk response cache with one `<hash>.json` file per request.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ResponseCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    /// The stored response for `hash`. Entries whose recorded hash differs
    /// from their file name are ignored.
    pub fn get(&self, hash: &str) -> Option<String> {
        let raw = fs::read(self.path_for(hash)).ok()?;
        let entry: CacheEntry = serde_json::from_slice(&raw).ok()?;
        (entry.request_hash == hash).then_some(entry.response_body)
    }

    /// Stores a response. Concurrent writers of one key race benignly: each
    /// writes a private temp file and renames it into place.
    pub fn put(&self, hash: &str, response_body: &str) -> Result<()> {
        let entry = CacheEntry {
            request_hash: hash.to_string(),
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            response_body: response_body.to_string(),
        };
        let target = self.path_for(hash);
        let mut tmp = tempfile_in(&self.dir)?;
        serde_json::to_writer(&mut tmp.1, &entry)?;
        tmp.1.flush().map_err(|e| Error::io(&tmp.0, e))?;
        drop(tmp.1);
        fs::rename(&tmp.0, &target).map_err(|e| Error::io(&target, e))
    }

    /// All entries, sorted by hash.
    pub fn entries(&self) -> Result<Vec<CacheEntry>> {
        let mut out = Vec::new();
        for item in fs::read_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))? {
            let path = item.map_err(|e| Error::io(&self.dir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if let Ok(entry) = serde_json::from_slice::<CacheEntry>(&raw) {
                out.push(entry);
            }
        }
        out.sort_by(|a, b| a.request_hash.cmp(&b.request_hash));
        Ok(out)
    }

    /// Writes every cached response as a replay fixture, so a recorded live
    /// run can be replayed offline.
    pub fn export_replay(&self, path: &Path) -> Result<usize> {
        let entries = self.entries()?;
        let mut buf = String::new();
        for e in &entries {
            buf.push_str(&serde_json::to_string(&serde_json::json!({
                "request_hash": e.request_hash,
                "response_body": e.response_body,
            }))?);
            buf.push('\n');
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))?;
        Ok(entries.len())
    }
}

fn tempfile_in(dir: &Path) -> Result<(PathBuf, fs::File)> {
    use std::sync::atomic::{AtomicU64, Ordering};
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = dir.join(format!(".tmp-{}-{n}", std::process::id()));
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, file))
}
