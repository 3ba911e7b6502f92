//! Translationese span ratio (TSR) and span statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AnnotatedSpan, AnnotationSet, SpanCategory};
use crate::corpus::Corpus;
use crate::{Error, Result};

/// TSR above this marks a translation as significantly unnatural.
pub const SIGNIFICANT_TSR: f64 = 0.2;

pub const DEFAULT_HISTOGRAM_EDGES: [f64; 5] = [0.0, 0.1, 0.2, 0.4, 1.0];

/// Unnatural sentence flow and unnatural phrase flow.
pub fn translationese_categories() -> BTreeSet<SpanCategory> {
    [SpanCategory::UnnaturalSentenceFlow, SpanCategory::UnnaturalPhraseFlow].into()
}

/// Length of the union of the spans whose category is in `categories`.
pub fn merged_length<'a>(
    spans: impl IntoIterator<Item = &'a AnnotatedSpan>,
    categories: &BTreeSet<SpanCategory>,
) -> usize {
    let mut intervals: Vec<(usize, usize)> = spans
        .into_iter()
        .filter(|s| categories.contains(&s.category))
        .map(|s| (s.start, s.end))
        .collect();
    intervals.sort_unstable();
    let mut total = 0;
    let mut current: Option<(usize, usize)> = None;
    for (start, end) in intervals {
        match current {
            Some((cs, ce)) if start <= ce => current = Some((cs, ce.max(end))),
            Some((cs, ce)) => {
                total += ce - cs;
                current = Some((start, end));
            }
            None => current = Some((start, end)),
        }
    }
    total + current.map_or(0, |(s, e)| e - s)
}

pub fn span_ratio(merged: usize, translation_length: usize) -> Result<f64> {
    if translation_length == 0 {
        return Err(Error::param("TSR of a zero-length translation"));
    }
    Ok(merged as f64 / translation_length as f64)
}

/// TSR of one translation, per annotator and averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct TsrRecord {
    pub record_id: String,
    pub system_id: String,
    pub per_annotator: BTreeMap<String, f64>,
    pub mean_tsr: f64,
}

/// One TSR record per annotated translation, in (record, system) order.
/// Translations nobody annotated are skipped.
pub fn tsr_records(set: &AnnotationSet, categories: &BTreeSet<SpanCategory>) -> Result<Vec<TsrRecord>> {
    let mut out = Vec::with_capacity(set.items.len());
    for item in set.items.values() {
        if item.annotators.is_empty() {
            continue;
        }
        let merged: Vec<(String, usize)> = item
            .annotators
            .iter()
            .map(|a| (a.clone(), merged_length(set.spans_for(a, &item.record_id, &item.system_id), categories)))
            .collect();
        let per_annotator = merged
            .iter()
            .map(|(a, m)| span_ratio(*m, item.length).map(|r| (a.clone(), r)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        // All annotators share the length, so the mean is one integer ratio
        // and a mean of exactly 0.2 stays at 0.2 for the strict threshold.
        let total: usize = merged.iter().map(|(_, m)| m).sum();
        let mean_tsr = span_ratio(total, item.length * merged.len())?;
        out.push(TsrRecord {
            record_id: item.record_id.clone(),
            system_id: item.system_id.clone(),
            per_annotator,
            mean_tsr,
        });
    }
    Ok(out)
}

/// Share of values strictly above `threshold`.
pub fn proportion_significant(values: &[f64], threshold: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::param("proportion over an empty list"));
    }
    Ok(values.iter().filter(|v| **v > threshold).count() as f64 / values.len() as f64)
}

/// System-level TSR within one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TsrSummary {
    /// Direction label from the corpus, or `unknown`.
    pub direction: String,
    pub system_id: String,
    pub mean_tsr: f64,
    pub proportion_significant: f64,
    pub n: usize,
}

/// Averages record TSRs per (direction, system).
pub fn summarize_tsr(records: &[TsrRecord], corpus: Option<&Corpus>, threshold: f64) -> Result<Vec<TsrSummary>> {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in records {
        let direction = corpus
            .and_then(|c| c.get(&r.record_id))
            .map(|rec| rec.direction.to_string())
            .unwrap_or_else(|| "unknown".into());
        groups.entry((direction, r.system_id.clone())).or_default().push(r.mean_tsr);
    }
    groups
        .into_iter()
        .map(|((direction, system_id), values)| {
            Ok(TsrSummary {
                mean_tsr: values.iter().sum::<f64>() / values.len() as f64,
                proportion_significant: proportion_significant(&values, threshold)?,
                n: values.len(),
                direction,
                system_id,
            })
        })
        .collect()
}

/// Raw span counts per group and category.
pub fn category_counts<K: Ord>(
    spans: &[AnnotatedSpan],
    key: impl Fn(&AnnotatedSpan) -> K,
) -> BTreeMap<K, BTreeMap<SpanCategory, usize>> {
    let mut out: BTreeMap<K, BTreeMap<SpanCategory, usize>> = BTreeMap::new();
    for s in spans {
        *out.entry(key(s)).or_default().entry(s.category).or_default() += 1;
    }
    out
}

/// Span counts per group and category averaged over all annotators in the
/// set (an annotator with no spans in a group counts as zero).
pub fn mean_category_counts<K: Ord>(
    set: &AnnotationSet,
    key: impl Fn(&AnnotatedSpan) -> K,
) -> BTreeMap<K, BTreeMap<SpanCategory, f64>> {
    let annotators = set.annotators().len().max(1) as f64;
    category_counts(&set.spans, key)
        .into_iter()
        .map(|(k, counts)| (k, counts.into_iter().map(|(c, n)| (c, n as f64 / annotators)).collect()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub proportion: f64,
}

impl HistogramBin {
    /// `[lo,hi]` for the first bin, `(lo,hi]` after.
    pub fn label(&self, first: bool) -> String {
        format!("{}{},{}]", if first { "[" } else { "(" }, self.lower, self.upper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsrHistogram {
    pub bins: Vec<HistogramBin>,
    pub threshold: f64,
    /// Share of values strictly above `threshold`.
    pub share_above: f64,
}

/// Proportion of values per bin. The first bin is closed, later bins are
/// left-open: edges `[0, 0.2, 1]` give `[0, 0.2]` and `(0.2, 1]`.
pub fn tsr_histogram(values: &[f64], edges: &[f64], threshold: f64) -> Result<TsrHistogram> {
    if edges.len() < 2 || edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::param("histogram needs at least two finite edges"));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("histogram edges must be strictly increasing"));
    }
    if edges[0] > 0.0 || edges[edges.len() - 1] < 1.0 {
        return Err(Error::param("histogram edges must cover [0, 1]"));
    }
    let mut counts = vec![0usize; edges.len() - 1];
    for &v in values {
        if !(edges[0]..=edges[edges.len() - 1]).contains(&v) {
            return Err(Error::param(format!("TSR {v} outside histogram range")));
        }
        let bin = (0..counts.len()).find(|&i| v <= edges[i + 1]).expect("value within range");
        counts[bin] += 1;
    }
    let n = values.len() as f64;
    let share_above = proportion_significant(values, threshold)?;
    Ok(TsrHistogram {
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin {
                lower: edges[i],
                upper: edges[i + 1],
                count,
                proportion: count as f64 / n,
            })
            .collect(),
        threshold,
        share_above,
    })
}

/// Flat form of a [`TsrRecord`] for CSV exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsrRow {
    pub record_id: String,
    pub system_id: String,
    pub annotators: usize,
    pub mean_tsr: f64,
}

impl From<&TsrRecord> for TsrRow {
    fn from(r: &TsrRecord) -> Self {
        TsrRow {
            record_id: r.record_id.clone(),
            system_id: r.system_id.clone(),
            annotators: r.per_annotator.len(),
            mean_tsr: r.mean_tsr,
        }
    }
}

fn flush<W: Write>(mut out: csv::Writer<W>, what: &str) -> Result<()> {
    out.flush().map_err(|e| Error::io(format!("<{what} writer>"), e))
}

/// `record_id,system_id,annotators,mean_tsr` with full-precision ratios.
pub fn write_tsr_records<W: Write>(records: &[TsrRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if records.is_empty() {
        out.write_record(["record_id", "system_id", "annotators", "mean_tsr"])?;
    }
    for r in records {
        out.serialize(TsrRow::from(r))?;
    }
    flush(out, "tsr")
}

pub fn read_tsr_rows<R: Read>(r: R) -> Result<Vec<TsrRow>> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// `direction,system,mean_tsr,share_tsr_gt_<threshold>,n`.
pub fn write_tsr_summary<W: Write>(rows: &[TsrSummary], threshold: f64, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let share = format!("share_tsr_gt_{threshold}");
    out.write_record(["direction", "system", "mean_tsr", share.as_str(), "n"])?;
    for r in rows {
        out.write_record([
            r.direction.clone(),
            r.system_id.clone(),
            format!("{:.4}", r.mean_tsr),
            format!("{:.4}", r.proportion_significant),
            r.n.to_string(),
        ])?;
    }
    flush(out, "tsr summary")
}

/// `group,category,mean_count` rows.
pub fn write_category_counts<W: Write>(counts: &BTreeMap<String, BTreeMap<SpanCategory, f64>>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["group", "category", "mean_count"])?;
    for (group, per) in counts {
        for (category, n) in per {
            out.write_record([group.clone(), category.label().to_string(), format!("{n:.2}")])?;
        }
    }
    flush(out, "category")
}

/// `bin,count,proportion` rows followed by nothing else; the threshold share
/// is part of the summary table.
pub fn write_histogram_csv<W: Write>(h: &TsrHistogram, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["bin", "count", "proportion"])?;
    for (i, b) in h.bins.iter().enumerate() {
        out.write_record([b.label(i == 0), b.count.to_string(), format!("{:.4}", b.proportion)])?;
    }
    flush(out, "histogram")
}
