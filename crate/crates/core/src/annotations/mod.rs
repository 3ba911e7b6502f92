//! Span-annotation exports and naturalness rankings.
//!
//! Offsets and lengths are counted in Unicode scalar values.

pub mod ranking;
pub mod tsr;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

pub use ranking::{
    average_rank, kendall_tau, pairwise_agreement, parse_rankings, write_agreement, write_average_ranks, Agreement,
    RankingRecord,
};
pub use tsr::{
    category_counts, mean_category_counts, merged_length, proportion_significant, read_tsr_rows, span_ratio,
    summarize_tsr, translationese_categories, tsr_histogram, tsr_records, write_category_counts, write_histogram_csv,
    write_tsr_records, write_tsr_summary, HistogramBin, TsrHistogram, TsrRecord, TsrRow, TsrSummary,
    DEFAULT_HISTOGRAM_EDGES, SIGNIFICANT_TSR,
};

use crate::corpus::Corpus;
use crate::util::read_utf8;
use crate::{Error, Result};

/// The eight error categories of the annotation guideline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpanCategory {
    UnnaturalSentenceFlow,
    UnnaturalPhraseFlow,
    CultureSpecificReference,
    SensitiveContent,
    Mistranslation,
    Terminology,
    NonTranslation,
    Others,
}

impl SpanCategory {
    pub const ALL: [SpanCategory; 8] = [
        SpanCategory::UnnaturalSentenceFlow,
        SpanCategory::UnnaturalPhraseFlow,
        SpanCategory::CultureSpecificReference,
        SpanCategory::SensitiveContent,
        SpanCategory::Mistranslation,
        SpanCategory::Terminology,
        SpanCategory::NonTranslation,
        SpanCategory::Others,
    ];

    /// Label as shown in the annotation platform.
    pub fn label(self) -> &'static str {
        match self {
            SpanCategory::UnnaturalSentenceFlow => "Unnatural Sentence Flow",
            SpanCategory::UnnaturalPhraseFlow => "Unnatural Phrase Flow",
            SpanCategory::CultureSpecificReference => "Culture-specific Reference",
            SpanCategory::SensitiveContent => "Sensitive Content",
            SpanCategory::Mistranslation => "Mistranslation",
            SpanCategory::Terminology => "Terminology",
            SpanCategory::NonTranslation => "Non-translation",
            SpanCategory::Others => "Others",
        }
    }
}

impl fmt::Display for SpanCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Accepts platform labels case- and punctuation-insensitively
/// ("Unnatural Phrase Flow", "unnatural_phrase_flow", "UnnaturalPhraseFlow").
impl FromStr for SpanCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();
        let found = SpanCategory::ALL.into_iter().find(|c| {
            let label: String =
                c.label().chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();
            label == key
        });
        match (found, key.as_str()) {
            (Some(c), _) => Ok(c),
            (None, "other") => Ok(SpanCategory::Others),
            _ => Err(Error::UnknownCategory(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AnnotatedSpan {
    pub annotator: String,
    pub record_id: String,
    pub system_id: String,
    /// Inclusive start offset.
    pub start: usize,
    /// Exclusive end offset.
    pub end: usize,
    pub category: SpanCategory,
}

/// One annotated translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedItem {
    pub record_id: String,
    pub system_id: String,
    /// Translation length in characters.
    pub length: usize,
    /// Annotators who submitted an annotation, spans or not.
    pub annotators: BTreeSet<String>,
}

/// Parsed export: all spans plus every annotated translation, so that an
/// annotator who marked nothing contributes a ratio of zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    pub spans: Vec<AnnotatedSpan>,
    pub items: BTreeMap<(String, String), AnnotatedItem>,
}

impl AnnotationSet {
    pub fn annotators(&self) -> BTreeSet<String> {
        self.items.values().flat_map(|i| i.annotators.iter().cloned()).collect()
    }

    /// Spans of one annotator on one translation.
    pub fn spans_for<'a>(
        &'a self,
        annotator: &'a str,
        record_id: &'a str,
        system_id: &'a str,
    ) -> impl Iterator<Item = &'a AnnotatedSpan> + 'a {
        self.spans
            .iter()
            .filter(move |s| s.annotator == annotator && s.record_id == record_id && s.system_id == system_id)
    }
}

pub fn parse_annotation_export(path: &Path, corpus: Option<&Corpus>) -> Result<AnnotationSet> {
    parse_annotation_json(&read_utf8(path)?, corpus)
}

fn id_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn annotator_of(annotation: &Value) -> Option<String> {
    match annotation.get("completed_by")? {
        Value::Object(o) => o.get("email").or_else(|| o.get("id")).and_then(id_string),
        other => id_string(other),
    }
}

/// Parses the annotation platform's JSON export: an array of tasks with
/// `data.{record_id, system_id, text}` and `annotations[].result[]` label
/// spans. When a task carries no text, its length comes from the matching
/// corpus translation; when both exist they must agree in length.
pub fn parse_annotation_json(content: &str, corpus: Option<&Corpus>) -> Result<AnnotationSet> {
    let tasks: Vec<Value> = serde_json::from_str(content)?;
    let mut set = AnnotationSet::default();
    for (ti, task) in tasks.iter().enumerate() {
        let task_name = task.get("id").and_then(id_string).unwrap_or_else(|| format!("#{ti}"));
        let data = task
            .get("data")
            .ok_or_else(|| Error::MissingMetadata(format!("task {task_name}: no `data`")))?;
        let record_id = data
            .get("record_id")
            .and_then(id_string)
            .ok_or_else(|| Error::MissingMetadata(format!("task {task_name}: no `data.record_id`")))?;
        let system_id = data
            .get("system_id")
            .or_else(|| data.get("system"))
            .and_then(id_string)
            .ok_or_else(|| Error::MissingMetadata(format!("task {task_name}: no `data.system_id`")))?;

        let exported = data.get("text").or_else(|| data.get("translation")).and_then(Value::as_str);
        let stored = corpus
            .and_then(|c| c.get(&record_id))
            .and_then(|r| r.translations.iter().find(|t| t.system == system_id))
            .map(|t| t.text.as_str());
        let length = match (exported, stored) {
            (Some(e), Some(s)) if e.chars().count() != s.chars().count() => {
                return Err(Error::param(format!(
                    "task {task_name}: exported text of `{record_id}`/`{system_id}` differs in length from the corpus"
                )))
            }
            (Some(t), _) | (None, Some(t)) => t.chars().count(),
            (None, None) => {
                return Err(Error::MissingMetadata(format!(
                    "task {task_name}: no translation text for `{record_id}`/`{system_id}`"
                )))
            }
        };

        let key = (record_id.clone(), system_id.clone());
        let item = set.items.entry(key).or_insert_with(|| AnnotatedItem {
            record_id: record_id.clone(),
            system_id: system_id.clone(),
            length,
            annotators: BTreeSet::new(),
        });
        if item.length != length {
            return Err(Error::param(format!("`{record_id}`/`{system_id}` appears with different lengths")));
        }

        let annotations = task.get("annotations").and_then(Value::as_array).map(Vec::as_slice).unwrap_or(&[]);
        for annotation in annotations {
            if annotation.get("was_cancelled").and_then(Value::as_bool) == Some(true) {
                continue;
            }
            let annotator = annotator_of(annotation)
                .ok_or_else(|| Error::MissingMetadata(format!("task {task_name}: annotation without `completed_by`")))?;
            item.annotators.insert(annotator.clone());
            let results = annotation.get("result").and_then(Value::as_array).map(Vec::as_slice).unwrap_or(&[]);
            for result in results {
                let Some(value) = result.get("value") else { continue };
                let Some(label) = value.get("labels").and_then(|l| l.get(0)).and_then(Value::as_str) else {
                    continue;
                };
                let category: SpanCategory = label.parse()?;
                let offset = |k: &str| {
                    value.get(k).and_then(Value::as_u64).map(|v| v as usize).ok_or_else(|| {
                        Error::MissingMetadata(format!("task {task_name}: span without integer `{k}`"))
                    })
                };
                let (start, end) = (offset("start")?, offset("end")?);
                if start >= end || end > length {
                    return Err(Error::SpanOutOfBounds { record_id: record_id.clone(), start, end, len: length });
                }
                set.spans.push(AnnotatedSpan {
                    annotator: annotator.clone(),
                    record_id: record_id.clone(),
                    system_id: system_id.clone(),
                    start,
                    end,
                    category,
                });
            }
        }
    }
    Ok(set)
}
