//! Reference-free quality estimation through the scorer sidecar.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::Lang;
use crate::inference::Client;
use crate::util::read_utf8;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QualityPair {
    pub src_lang: String,
    pub tgt_lang: String,
    pub source: String,
    pub translation: String,
}

impl QualityPair {
    pub fn new(src: Lang, tgt: Lang, source: &str, translation: &str) -> Self {
        QualityPair {
            src_lang: src.code().into(),
            tgt_lang: tgt.code().into(),
            source: source.into(),
            translation: translation.into(),
        }
    }
}

/// Scores (source, translation) pairs in [0, 1], preserving batch order.
pub trait QualityEstimator: Send + Sync {
    fn score(&self, pairs: &[QualityPair]) -> Result<Vec<f64>>;
}

fn check_scores(scores: Vec<f64>, expected: usize) -> Result<Vec<f64>> {
    if scores.len() != expected {
        return Err(Error::MalformedResponse(format!("quality: {} scores for {expected} pairs", scores.len())));
    }
    if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::MalformedResponse(format!("quality score {bad} outside [0, 1]")));
    }
    Ok(scores)
}

/// Quality estimator backed by the sidecar's `POST /quality`.
pub struct SidecarQuality {
    client: Arc<Client>,
}

impl SidecarQuality {
    pub fn new(client: Arc<Client>) -> Self {
        SidecarQuality { client }
    }
}

pub fn quality_request_body(pairs: &[QualityPair]) -> serde_json::Value {
    json!({ "pairs": pairs })
}

#[derive(Deserialize)]
struct QualityResponse {
    scores: Vec<f64>,
}

impl QualityEstimator for SidecarQuality {
    fn score(&self, pairs: &[QualityPair]) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let raw = self.client.post_json("quality", &quality_request_body(pairs))?;
        let resp: QualityResponse =
            serde_json::from_str(&raw).map_err(|e| Error::MalformedResponse(format!("quality: {e}")))?;
        check_scores(resp.scores, pairs.len())
    }
}

/// Canned scores keyed by (source, translation).
#[derive(Debug, Clone, Default)]
pub struct FixtureQuality {
    table: HashMap<(String, String), f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QualityFixtureLine {
    pub source: String,
    pub translation: String,
    pub score: f64,
}

impl FixtureQuality {
    pub fn insert(&mut self, source: impl Into<String>, translation: impl Into<String>, score: f64) {
        self.table.insert((source.into(), translation.into()), score);
    }

    /// Loads JSONL lines of `{"source", "translation", "score"}`.
    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let mut q = Self::default();
        for (i, line) in read_utf8(path)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: QualityFixtureLine = serde_json::from_str(line).map_err(|e| Error::MalformedFixture {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })?;
            q.insert(e.source, e.translation, e.score);
        }
        Ok(q)
    }
}

impl QualityEstimator for FixtureQuality {
    fn score(&self, pairs: &[QualityPair]) -> Result<Vec<f64>> {
        let scores = pairs
            .iter()
            .map(|p| {
                self.table
                    .get(&(p.source.clone(), p.translation.clone()))
                    .copied()
                    .ok_or_else(|| Error::NoFixture(format!("quality of {:?}", p.translation)))
            })
            .collect::<Result<Vec<_>>>()?;
        check_scores(scores, pairs.len())
    }
}
