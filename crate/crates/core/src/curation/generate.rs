//! Reference polishing and knowledge-distillation re-translation.

use crate::corpus::{Corpus, ParallelRecord, Translation, Variant};
use crate::inference::{ChatMessage, Client};
use crate::util::parallel_map;
use crate::{Error, Result};

use super::prompt::{render_prompt, PromptVariant};

pub const DEFAULT_ABORT_THRESHOLD: f64 = 0.05;
pub const KD_SYSTEM: &str = "kd";

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationJob {
    /// Largest tolerated share of failed records; above it the job aborts.
    pub abort_threshold: f64,
    /// Overwrite existing outputs (KD only).
    pub force: bool,
    /// System id given to KD translations.
    pub system: String,
}

impl Default for GenerationJob {
    fn default() -> Self {
        GenerationJob { abort_threshold: DEFAULT_ABORT_THRESHOLD, force: false, system: KD_SYSTEM.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationFailure {
    pub record_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationOutcome {
    pub corpus: Corpus,
    /// Records left unchanged because their request failed.
    pub failures: Vec<GenerationFailure>,
}

fn generate(client: &Client, prompt: &str) -> Result<String> {
    let text = client.chat_complete(&[ChatMessage::user(prompt)])?;
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::MalformedResponse("empty completion".into()));
    }
    Ok(text.to_string())
}

fn check_threshold(job: &GenerationJob, failed: usize, total: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&job.abort_threshold) {
        return Err(Error::param(format!("abort threshold {} outside [0, 1]", job.abort_threshold)));
    }
    if failed as f64 > job.abort_threshold * total as f64 {
        return Err(Error::JobAborted { failed, total, limit: job.abort_threshold * 100.0 });
    }
    Ok(())
}

/// Text to polish: the audit copy if the record was polished before, so
/// reruns start from the same input.
fn polish_input(r: &ParallelRecord) -> Option<&Translation> {
    r.translations
        .iter()
        .find(|t| t.variant == Variant::ReferenceOriginal)
        .or_else(|| r.reference())
}

/// Replaces each gold reference with a polished version from `client`,
/// keeping the original under variant `reference-original`.
pub fn polish_references(corpus: &Corpus, client: &Client, job: &GenerationJob) -> Result<GenerationOutcome> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    check_threshold(job, 0, corpus.len())?;
    for r in corpus.records() {
        if polish_input(r).is_none() {
            return Err(Error::MissingVariant { record_id: r.id.clone(), what: "a reference translation".into() });
        }
    }
    let results = parallel_map(corpus.records(), client.config().max_concurrency, |r| {
        let original = polish_input(r).expect("checked above");
        let prompt = render_prompt(PromptVariant::Polishing, r.direction, &r.source_text, Some(&original.text))?;
        generate(client, &prompt)
    });

    let mut records = Vec::with_capacity(corpus.len());
    let mut failures = Vec::new();
    for (r, result) in corpus.records().iter().zip(results) {
        match result {
            Ok(polished) => records.push(with_polished_reference(r, polished)),
            Err(e) => {
                failures.push(GenerationFailure { record_id: r.id.clone(), error: e.to_string() });
                records.push(r.clone());
            }
        }
    }
    check_threshold(job, failures.len(), corpus.len())?;
    Ok(GenerationOutcome { corpus: Corpus::new(records)?, failures })
}

fn with_polished_reference(r: &ParallelRecord, polished: String) -> ParallelRecord {
    let original = polish_input(r).expect("checked by caller").clone();
    let mut out = r.clone();
    out.translations.retain(|t| t.variant != Variant::ReferenceOriginal);
    let pos = out
        .translations
        .iter()
        .position(|t| t.variant == Variant::Reference)
        .expect("a reference exists whenever polish input exists");
    let system = out.translations[pos].system.clone();
    out.translations[pos].text = polished;
    out.translations
        .insert(pos + 1, Translation::new(system, Variant::ReferenceOriginal, original.text));
    out
}

/// Adds a direct translation from `client` to every record under
/// `job.system`. Existing translations of that system are only replaced
/// with `job.force`.
pub fn kd_translate(corpus: &Corpus, client: &Client, job: &GenerationJob) -> Result<GenerationOutcome> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    check_threshold(job, 0, corpus.len())?;
    if !job.force {
        if let Some(r) = corpus.records().iter().find(|r| r.translation(&job.system, None).is_some()) {
            return Err(Error::param(format!(
                "record `{}` already has a `{}` translation; pass force to overwrite",
                r.id, job.system
            )));
        }
    }
    let results = parallel_map(corpus.records(), client.config().max_concurrency, |r| {
        let prompt = render_prompt(PromptVariant::Direct, r.direction, &r.source_text, None)?;
        generate(client, &prompt)
    });

    let mut records = Vec::with_capacity(corpus.len());
    let mut failures = Vec::new();
    for (r, result) in corpus.records().iter().zip(results) {
        let mut out = r.clone();
        match result {
            Ok(text) => {
                out.translations.retain(|t| t.system != job.system);
                out.translations.push(Translation::new(&job.system, Variant::Direct, text));
            }
            Err(e) => failures.push(GenerationFailure { record_id: r.id.clone(), error: e.to_string() }),
        }
        records.push(out);
    }
    check_threshold(job, failures.len(), corpus.len())?;
    Ok(GenerationOutcome { corpus: Corpus::new(records)?, failures })
}
