//! Mitigation datasets: polished references, KD re-translations,
//! perplexity filtering and SFT export.

pub mod filter;
pub mod generate;
pub mod prompt;
pub mod sft;

pub use filter::{filter_by_perplexity, read_manifest, write_manifest, FilterOutcome, RemovedRecord};
pub use generate::{
    kd_translate, polish_references, GenerationFailure, GenerationJob, GenerationOutcome, DEFAULT_ABORT_THRESHOLD,
    KD_SYSTEM,
};
pub use prompt::{extract_source_text, render_prompt, render_prompt_named, PromptVariant};
pub use sft::{sft_instances, write_sft_jsonl, SftInstance, SftTarget, TrainingConfig};
