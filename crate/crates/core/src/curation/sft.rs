//! Training-ready JSONL instances and the trainer config file.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Direction, Variant};
use crate::{Error, Result};

use super::prompt::{render_prompt, PromptVariant};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftInstance {
    pub id: String,
    pub prompt: String,
    pub completion: String,
    pub direction: Direction,
}

/// Which translation becomes the completion: the first one with `variant`,
/// optionally restricted to one system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SftTarget {
    pub variant: Variant,
    pub system: Option<String>,
}

impl SftTarget {
    pub fn variant(variant: Variant) -> Self {
        SftTarget { variant, system: None }
    }

    pub fn system(system: impl Into<String>, variant: Variant) -> Self {
        SftTarget { variant, system: Some(system.into()) }
    }
}

impl std::fmt::Display for SftTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.system {
            Some(s) => write!(f, "system `{s}` variant `{}`", self.variant),
            None => write!(f, "variant `{}`", self.variant),
        }
    }
}

/// Builds one instance per record, ordered by record id, with the direct
/// prompt and the selected translation as the completion.
pub fn sft_instances(corpus: &Corpus, target: &SftTarget) -> Result<Vec<SftInstance>> {
    let mut records: Vec<_> = corpus.records().iter().collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    records
        .into_iter()
        .map(|r| {
            let t = match &target.system {
                Some(system) => r.translation(system, Some(target.variant)),
                None => r.translations.iter().find(|t| t.variant == target.variant),
            }
            .ok_or_else(|| Error::MissingVariant { record_id: r.id.clone(), what: target.to_string() })?;
            if t.text.trim().is_empty() {
                return Err(Error::MissingVariant { record_id: r.id.clone(), what: format!("non-empty {target}") });
            }
            Ok(SftInstance {
                id: r.id.clone(),
                prompt: render_prompt(PromptVariant::Direct, r.direction, &r.source_text, None)?,
                completion: t.text.clone(),
                direction: r.direction,
            })
        })
        .collect()
}

pub fn write_sft_jsonl<W: Write>(instances: &[SftInstance], mut w: W) -> Result<()> {
    for i in instances {
        serde_json::to_writer(&mut w, i)?;
        w.write_all(b"\n").map_err(|e| Error::io("<sft writer>", e))?;
    }
    Ok(())
}

/// Hyperparameters handed to an external LoRA trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub dataset: String,
    pub lora_rank: u32,
    pub learning_rate: f64,
    pub warmup_ratio: f64,
    pub num_train_epochs: u32,
    pub batch_size: u32,
}

impl TrainingConfig {
    pub fn for_dataset(dataset: impl Into<String>) -> Self {
        TrainingConfig {
            dataset: dataset.into(),
            lora_rank: 16,
            learning_rate: 1e-4,
            warmup_ratio: 0.1,
            num_train_epochs: 3,
            batch_size: 16,
        }
    }

    /// Flat `key=value` lines in a fixed order.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset={}", self.dataset);
        let _ = writeln!(s, "lora_rank={}", self.lora_rank);
        let _ = writeln!(s, "learning_rate={:e}", self.learning_rate);
        let _ = writeln!(s, "warmup_ratio={}", self.warmup_ratio);
        let _ = writeln!(s, "num_train_epochs={}", self.num_train_epochs);
        let _ = writeln!(s, "batch_size={}", self.batch_size);
        s
    }
}
