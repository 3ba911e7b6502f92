//! Measure and mitigate translationese in machine-translation corpora.
//!
//! The crate is organised around the stages of a curation run:
//!
//! * [`corpus`] ingests, validates, splits and summarises parallel corpora.
//! * [`inference`] talks to OpenAI-compatible chat and scoring endpoints with
//!   caching, retries, bounded concurrency and a hermetic replay mode.
//! * [`metrics`] computes perplexity, lexical density and length variety, and
//!   provides the paired bootstrap test used for variant comparisons.
//! * [`annotations`] turns span-annotation exports and ranking sheets into
//!   translationese span ratios, histograms, average ranks and agreement.
//! * [`curation`] renders prompts, polishes references, re-translates for
//!   distillation, filters by perplexity and emits fine-tuning datasets.
//! * [`analysis`] correlates perplexity with span ratios, compares variants,
//!   sweeps filter proportions and renders Markdown reports.

pub mod analysis;
pub mod annotations;
pub mod corpus;
pub mod curation;
mod error;
pub mod inference;
pub mod metrics;
pub(crate) mod util;

pub use corpus::{Corpus, Direction, Granularity, Lang, ParallelRecord, Translation, Variant};
pub use error::{Error, LineProblem, Result};
pub use inference::{Client, EndpointConfig, TokenScore};
pub use metrics::{MetricRecord, TaggedToken, Upos};
