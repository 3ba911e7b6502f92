//! Naturalness metrics: perplexity, lexical density and length variety.

mod quality;
pub mod significance;
mod tagging;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use quality::{
    quality_request_body, FixtureQuality, QualityEstimator, QualityFixtureLine, QualityPair, SidecarQuality,
};
pub use significance::{paired_significance, MIN_BOOTSTRAP_ITERATIONS};
pub use tagging::{
    tag_request_body, word_count, BasicTokenizer, FixtureTagger, SidecarTagger, TagFixtureLine, TaggedToken,
    Tagger, TaggerTokenizer, Tokenizer, Upos, TAG_BATCH_LIMIT,
};

use crate::corpus::{Direction, Granularity, ParallelRecord, Variant};
use crate::inference::{Client, TokenScore};
use crate::util::{parallel_map, stable_mean};
use crate::{Error, Result};

/// `exp(-mean(logprob))` over tokens that carry a logprob.
pub fn perplexity(scores: &[TokenScore]) -> Result<f64> {
    let (sum, n) = scores
        .iter()
        .filter_map(|s| s.logprob)
        .fold((0.0, 0usize), |(sum, n), lp| (sum + lp, n + 1));
    if n == 0 {
        return Err(Error::NoScorableTokens);
    }
    Ok((-sum / n as f64).exp())
}

/// Content words over non-punctuation words.
pub fn lexical_density(tokens: &[TaggedToken]) -> Result<f64> {
    let words = word_count(tokens);
    if words == 0 {
        return Err(Error::param("lexical density needs at least one non-punctuation token"));
    }
    let content = tokens.iter().filter(|t| t.upos.is_content()).count();
    Ok(content as f64 / words as f64)
}

/// `|src - tgt| / src` over token counts.
pub fn length_variety(src_tokens: usize, tgt_tokens: usize) -> Result<f64> {
    if src_tokens == 0 {
        return Err(Error::param("length variety needs a non-empty source"));
    }
    Ok(src_tokens.abs_diff(tgt_tokens) as f64 / src_tokens as f64)
}

/// Naturalness measurements for one translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub record_id: String,
    pub direction: Direction,
    pub granularity: Granularity,
    pub system: String,
    pub variant: Variant,
    pub ppl: f64,
    #[serde(rename = "lex")]
    pub lexical_density: f64,
    #[serde(rename = "len")]
    pub length_variety: f64,
    /// Quality-estimation score in [0, 1].
    pub quality: Option<f64>,
}

/// Picks one translation of a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationSelector {
    pub system: String,
    pub variant: Option<Variant>,
}

impl TranslationSelector {
    pub fn new(system: impl Into<String>, variant: Option<Variant>) -> Self {
        TranslationSelector { system: system.into(), variant }
    }
}

impl std::fmt::Display for TranslationSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.variant {
            Some(v) => write!(f, "system `{}` variant `{v}`", self.system),
            None => write!(f, "system `{}`", self.system),
        }
    }
}

/// Scores one translation: perplexity of the target text alone, lexical
/// density of the target, and length variety between tagger word counts of
/// source and target. A failing quality call leaves `quality` empty.
pub fn score_translation(
    scorer: &Client,
    tagger: &dyn Tagger,
    quality: Option<&dyn QualityEstimator>,
    record: &ParallelRecord,
    selector: &TranslationSelector,
) -> Result<MetricRecord> {
    let translation = record.translation(&selector.system, selector.variant).ok_or_else(|| {
        Error::TranslationNotFound { record_id: record.id.clone(), selector: selector.to_string() }
    })?;
    let ppl = perplexity(&scorer.score_text(&translation.text)?)?;
    let target_tokens = tagger.tag_one(record.direction.target, &translation.text)?;
    let source_tokens = tagger.tag_one(record.direction.source, &record.source_text)?;
    let lex = lexical_density(&target_tokens)?;
    let len = length_variety(word_count(&source_tokens), word_count(&target_tokens))?;
    let quality = quality.and_then(|q| {
        let pair = QualityPair::new(
            record.direction.source,
            record.direction.target,
            &record.source_text,
            &translation.text,
        );
        match q.score(std::slice::from_ref(&pair)) {
            Ok(s) => s.first().copied(),
            Err(e) => {
                log::warn!("quality estimate failed for {}: {e}", record.id);
                None
            }
        }
    });
    Ok(MetricRecord {
        record_id: record.id.clone(),
        direction: record.direction,
        granularity: record.granularity,
        system: translation.system.clone(),
        variant: translation.variant,
        ppl,
        lexical_density: lex,
        length_variety: len,
        quality,
    })
}

/// Scores many (record, selector) jobs with up to `workers` threads. Output
/// order follows input order.
pub fn score_many(
    scorer: &Client,
    tagger: &dyn Tagger,
    quality: Option<&dyn QualityEstimator>,
    jobs: &[(&ParallelRecord, TranslationSelector)],
    workers: usize,
) -> Result<Vec<MetricRecord>> {
    parallel_map(jobs, workers, |(record, selector)| score_translation(scorer, tagger, quality, record, selector))
        .into_iter()
        .collect()
}

pub const METRIC_RECORD_HEADER: &str = "record_id,direction,granularity,system,variant,ppl,lex,len,quality";

pub fn write_metric_records<W: Write>(records: &[MetricRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    if records.is_empty() {
        out.write_record(METRIC_RECORD_HEADER.split(','))?;
    }
    out.flush().map_err(|e| Error::io("<metrics writer>", e))?;
    Ok(())
}

pub fn read_metric_records<R: Read>(r: R) -> Result<Vec<MetricRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Grouping key of an aggregated metric row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub direction: Direction,
    pub granularity: Granularity,
    pub system: String,
    pub variant: Variant,
}

impl GroupKey {
    pub fn of(r: &MetricRecord) -> Self {
        GroupKey {
            direction: r.direction,
            granularity: r.granularity,
            system: r.system.clone(),
            variant: r.variant,
        }
    }
}

/// Per-group means.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub key: GroupKey,
    pub lexical_density: f64,
    pub length_variety: f64,
    pub ppl: f64,
    /// Mean over records that have a quality score.
    pub quality: Option<f64>,
    pub n: usize,
}

/// Arithmetic means per (direction, granularity, system, variant), sorted by
/// key. Results do not depend on record order.
pub fn aggregate_metrics(records: &[MetricRecord]) -> Result<Vec<MetricSummary>> {
    if records.is_empty() {
        return Err(Error::param("no metric records to aggregate"));
    }
    let mut groups: BTreeMap<GroupKey, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(GroupKey::of(r)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|(key, rs)| {
            let mean_of = |f: fn(&MetricRecord) -> f64| stable_mean(&mut rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            let mut q: Vec<f64> = rs.iter().filter_map(|r| r.quality).collect();
            MetricSummary {
                lexical_density: mean_of(|r| r.lexical_density),
                length_variety: mean_of(|r| r.length_variety),
                ppl: mean_of(|r| r.ppl),
                quality: (!q.is_empty()).then(|| stable_mean(&mut q)),
                n: rs.len(),
                key,
            }
        })
        .collect())
}

pub const METRIC_TABLE_HEADER: &str = "direction,granularity,system,variant,lex,len,ppl,quality,n";

/// Writes aggregated rows: Lex./Len. at 3 decimals, PPL at 1, quality
/// scaled by 100 at 1 decimal (empty when absent).
pub fn write_metric_table<W: Write>(rows: &[MetricSummary], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(METRIC_TABLE_HEADER.split(','))?;
    for r in rows {
        out.write_record([
            r.key.direction.to_string(),
            r.key.granularity.to_string(),
            r.key.system.clone(),
            r.key.variant.to_string(),
            format!("{:.3}", r.lexical_density),
            format!("{:.3}", r.length_variety),
            format!("{:.1}", r.ppl),
            r.quality.map(|q| format!("{:.1}", q * 100.0)).unwrap_or_default(),
            r.n.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<metric table writer>", e))?;
    Ok(())
}
