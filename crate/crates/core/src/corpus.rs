//! Parallel corpora: ingestion, validation, persistence, statistics and
//! train/dev splitting.
//!
//! A [`Corpus`] is immutable once built. Every downstream stage reads records
//! from it and produces a new corpus rather than editing one in place.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::Tokenizer;
use crate::util::{proportion_count, read_utf8};
use crate::{Error, LineProblem, Result};

/// Known languages: ISO 639-1 code and the display name used in prompts.
const LANGUAGES: &[(&str, &str)] = &[
    ("en", "English"),
    ("zh", "Chinese"),
    ("de", "German"),
    ("ru", "Russian"),
    ("cs", "Czech"),
    ("is", "Icelandic"),
];

/// A language from the registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lang(&'static str);

impl Lang {
    pub fn code(self) -> &'static str {
        self.0
    }

    /// English display name, as rendered into prompts.
    pub fn name(self) -> &'static str {
        LANGUAGES
            .iter()
            .find(|(code, _)| *code == self.0)
            .map(|(_, name)| *name)
            .expect("registry lookup of a registered code")
    }

    pub fn registry() -> impl Iterator<Item = Lang> {
        LANGUAGES.iter().map(|(code, _)| Lang(code))
    }
}

impl FromStr for Lang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LANGUAGES
            .iter()
            .find(|(code, _)| *code == s)
            .map(|(code, _)| Lang(code))
            .ok_or_else(|| Error::UnknownLanguage(s.to_string()))
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

/// Translation direction. Displays as `en-zh`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    pub source: Lang,
    pub target: Lang,
}

impl Direction {
    pub fn new(source: Lang, target: Lang) -> Result<Self> {
        if source == target {
            return Err(Error::param(format!("direction {source}-{target} has identical languages")));
        }
        Ok(Direction { source, target })
    }

    pub fn from_codes(source: &str, target: &str) -> Result<Self> {
        Direction::new(source.parse()?, target.parse()?)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source, self.target)
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (src, tgt) = s
            .split_once('-')
            .ok_or_else(|| Error::param(format!("direction `{s}` is not of the form src-tgt")))?;
        Direction::from_codes(src, tgt)
    }
}

impl Serialize for Direction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Document,
    Sentence,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Document => "document",
            Granularity::Sentence => "sentence",
        })
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "document" => Ok(Granularity::Document),
            "sentence" => Ok(Granularity::Sentence),
            _ => Err(Error::param(format!("unknown granularity `{s}`"))),
        }
    }
}

/// How a translation was produced.
///
/// `ReferenceOriginal` holds a gold reference that has been replaced by a
/// polished version; it is kept for audit only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Direct,
    Specified,
    Polishing,
    Reference,
    ReferenceOriginal,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Direct => "direct",
            Variant::Specified => "specified",
            Variant::Polishing => "polishing",
            Variant::Reference => "reference",
            Variant::ReferenceOriginal => "reference-original",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Variant::Direct,
            Variant::Specified,
            Variant::Polishing,
            Variant::Reference,
            Variant::ReferenceOriginal,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
        .ok_or_else(|| Error::param(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Translation {
    pub system: String,
    pub variant: Variant,
    pub text: String,
}

impl Translation {
    pub fn new(system: impl Into<String>, variant: Variant, text: impl Into<String>) -> Self {
        Translation { system: system.into(), variant, text: text.into() }
    }
}

/// One source text with its translations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelRecord {
    pub id: String,
    pub direction: Direction,
    pub domain: Option<String>,
    pub granularity: Granularity,
    pub source_text: String,
    pub translations: Vec<Translation>,
}

impl ParallelRecord {
    /// First translation from `system`, optionally restricted to `variant`.
    pub fn translation(&self, system: &str, variant: Option<Variant>) -> Option<&Translation> {
        self.translations
            .iter()
            .find(|t| t.system == system && variant.is_none_or(|v| t.variant == v))
    }

    /// The gold reference used as the training target.
    pub fn reference(&self) -> Option<&Translation> {
        self.translations.iter().find(|t| t.variant == Variant::Reference)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.source_text.is_empty() {
            return Err("empty source_text".into());
        }
        let mut seen = HashSet::new();
        for t in &self.translations {
            if t.text.is_empty() {
                return Err(format!("empty translation text for system `{}`", t.system));
            }
            if !seen.insert((t.system.as_str(), t.variant)) {
                return Err(format!("duplicate translation ({}, {})", t.system, t.variant));
            }
        }
        Ok(())
    }
}

/// A validated, immutable collection of records with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<ParallelRecord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, checking record invariants. An empty corpus is
    /// allowed here (a dev split may be empty); ingestion rejects it.
    pub fn new(records: Vec<ParallelRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            r.validate()
                .map_err(|m| Error::param(format!("record `{}`: {m}", r.id)))?;
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Corpus { records, index })
    }

    pub fn records(&self) -> &[ParallelRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ParallelRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn directions(&self) -> Vec<Direction> {
        let mut dirs: Vec<_> = self.records.iter().map(|r| r.direction).collect();
        dirs.sort();
        dirs.dedup();
        dirs
    }

    pub fn into_records(self) -> Vec<ParallelRecord> {
        self.records
    }

    /// Writes the corpus as parallel JSONL, one record per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            let line = RecordLine {
                id: Some(r.id.clone()),
                src_lang: r.direction.source.code().to_string(),
                tgt_lang: r.direction.target.code().to_string(),
                domain: r.domain.clone(),
                granularity: r.granularity,
                source_text: r.source_text.clone(),
                translations: r.translations.clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(|e| Error::io("<corpus writer>", e))?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl_string()).map_err(|e| Error::io(path, e))
    }
}

/// On-disk shape of one parallel-jsonl line. Field order is the export order.
#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    src_lang: String,
    tgt_lang: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    granularity: Granularity,
    source_text: String,
    translations: Vec<Translation>,
}

/// Input layouts accepted by [`ingest_corpus`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schema {
    ParallelJsonl,
    /// `source<TAB>target` lines; the target becomes the `gold` reference.
    TsvPairs {
        direction: Direction,
        granularity: Granularity,
        domain: Option<String>,
    },
}

/// Reads and validates a corpus file.
///
/// Records without an id get `<filename>:<line>`. All malformed lines are
/// reported together.
pub fn ingest_corpus(path: &Path, schema: &Schema) -> Result<Corpus> {
    let content = read_utf8(path)?;
    let file_name = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());

    let mut records = Vec::new();
    let mut problems = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match schema {
            Schema::ParallelJsonl => parse_jsonl_line(line, &file_name, line_no),
            Schema::TsvPairs { direction, granularity, domain } => {
                parse_tsv_line(line, &file_name, line_no, *direction, *granularity, domain)
            }
        };
        match parsed.and_then(|r| r.validate().map(|()| r)) {
            Ok(r) => records.push(r),
            Err(message) => problems.push(LineProblem { line: line_no, message }),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Malformed { path: path.to_path_buf(), problems });
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Corpus::new(records)
}

fn parse_jsonl_line(line: &str, file: &str, line_no: usize) -> std::result::Result<ParallelRecord, String> {
    let raw: RecordLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let direction = Direction::from_codes(&raw.src_lang, &raw.tgt_lang).map_err(|e| e.to_string())?;
    Ok(ParallelRecord {
        id: raw.id.unwrap_or_else(|| format!("{file}:{line_no}")),
        direction,
        domain: raw.domain,
        granularity: raw.granularity,
        source_text: raw.source_text,
        translations: raw.translations,
    })
}

fn parse_tsv_line(
    line: &str,
    file: &str,
    line_no: usize,
    direction: Direction,
    granularity: Granularity,
    domain: &Option<String>,
) -> std::result::Result<ParallelRecord, String> {
    let (source, target) = line
        .split_once('\t')
        .ok_or_else(|| "expected `source<TAB>target`".to_string())?;
    if target.contains('\t') {
        return Err("more than two tab-separated fields".into());
    }
    Ok(ParallelRecord {
        id: format!("{file}:{line_no}"),
        direction,
        domain: domain.clone(),
        granularity,
        source_text: source.to_string(),
        translations: vec![Translation::new("gold", Variant::Reference, target)],
    })
}

/// Per-direction corpus summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub direction: Direction,
    pub record_count: usize,
    pub avg_source_tokens: f64,
    pub domains: BTreeMap<String, usize>,
}

/// Domain key used for records without a domain label.
pub const UNSPECIFIED_DOMAIN: &str = "unspecified";

/// Record counts, mean source length in tokens and domain counts, one entry
/// per direction in direction order.
pub fn corpus_stats(corpus: &Corpus, tokenizer: &dyn Tokenizer) -> Result<Vec<CorpusStats>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut acc: BTreeMap<Direction, (usize, usize, BTreeMap<String, usize>)> = BTreeMap::new();
    for r in corpus.records() {
        let tokens = tokenizer.count_tokens(r.direction.source, &r.source_text)?;
        let entry = acc.entry(r.direction).or_default();
        entry.0 += 1;
        entry.1 += tokens;
        let domain = r.domain.clone().unwrap_or_else(|| UNSPECIFIED_DOMAIN.to_string());
        *entry.2.entry(domain).or_default() += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(direction, (count, tokens, domains))| CorpusStats {
            direction,
            record_count: count,
            avg_source_tokens: tokens as f64 / count as f64,
            domains,
        })
        .collect())
}

/// Writes `direction,records,avg_source_tokens,domains` with averages at one
/// decimal and domains as `label:count` joined by `;`.
pub fn write_stats_csv<W: Write>(stats: &[CorpusStats], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["direction", "records", "avg_source_tokens", "domains"])?;
    for s in stats {
        let domains = s
            .domains
            .iter()
            .map(|(d, c)| format!("{d}:{c}"))
            .collect::<Vec<_>>()
            .join(";");
        out.write_record([
            s.direction.to_string(),
            s.record_count.to_string(),
            format!("{:.1}", s.avg_source_tokens),
            domains,
        ])?;
    }
    out.flush().map_err(|e| Error::io("<stats writer>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub dev_fraction: f64,
    pub seed: u64,
}

/// Seeded train/dev split, drawn independently within each direction.
///
/// Within a direction, records are ordered by id, shuffled with the seed and
/// the first `floor(dev_fraction * n)` go to dev. Both halves keep the
/// corpus's original record order.
pub fn split_train_dev(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus)> {
    if !(0.0..1.0).contains(&spec.dev_fraction) {
        return Err(Error::param(format!("dev_fraction {} outside [0, 1)", spec.dev_fraction)));
    }
    let mut dev_ids = HashSet::new();
    for direction in corpus.directions() {
        let mut ids: Vec<&str> = corpus
            .records()
            .iter()
            .filter(|r| r.direction == direction)
            .map(|r| r.id.as_str())
            .collect();
        ids.sort_unstable();
        let take = proportion_count(spec.dev_fraction, ids.len());
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        ids.shuffle(&mut rng);
        dev_ids.extend(ids.into_iter().take(take).map(str::to_owned));
    }
    let (dev, train): (Vec<_>, Vec<_>) = corpus
        .records()
        .iter()
        .cloned()
        .partition(|r| dev_ids.contains(&r.id));
    Ok((Corpus::new(train)?, Corpus::new(dev)?))
}
