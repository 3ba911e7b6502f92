//! Run configuration: a JSON file merged with command-line flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Args;
use curator::inference::{ResponseCache, API_KEY_ENV};
use curator::metrics::{FixtureQuality, FixtureTagger, QualityEstimator, SidecarQuality, SidecarTagger, Tagger};
use curator::{Client, EndpointConfig};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 0;

/// Settings shared by every subcommand. Each may come from the config file;
/// a flag given on the command line wins.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Parallel corpus (JSONL).
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Seed for splits and bootstrap resampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Base URL of the chat endpoint used for polishing and distillation.
    #[arg(long, global = true)]
    pub chat_url: Option<String>,
    #[arg(long, global = true)]
    pub chat_model: Option<String>,
    /// Answer chat requests from this replay fixture instead of the network.
    #[arg(long, global = true)]
    pub chat_replay: Option<PathBuf>,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,

    /// Base URL of the completions endpoint used for perplexity.
    #[arg(long, global = true)]
    pub score_url: Option<String>,
    #[arg(long, global = true)]
    pub score_model: Option<String>,
    #[arg(long, global = true)]
    pub score_replay: Option<PathBuf>,

    /// Base URL of the tagging and quality-estimation sidecar.
    #[arg(long, global = true)]
    pub sidecar_url: Option<String>,
    /// JSONL table of canned tagger output; replaces the sidecar's /tag.
    #[arg(long, global = true)]
    pub tagger_fixture: Option<PathBuf>,
    /// JSONL table of canned quality scores; replaces the sidecar's /quality.
    #[arg(long, global = true)]
    pub quality_fixture: Option<PathBuf>,

    /// Response cache for live endpoints.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Maximum in-flight requests per endpoint.
    #[arg(long, global = true)]
    pub concurrency: Option<usize>,
    #[arg(long, global = true)]
    pub max_retries: Option<u32>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        Settings { $($field: $flags.$field.or($file.$field),)* }
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Flags win over the file.
    pub fn merge(flags: Settings, file: Settings) -> Settings {
        overlay!(
            flags, file, out, corpus, seed, chat_url, chat_model, chat_replay, temperature, score_url, score_model,
            score_replay, sidecar_url, tagger_fixture, quality_fixture, cache_dir, concurrency, max_retries
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Everything except the output directory, which must not change the
    /// identity of a run.
    pub fn hashed(&self) -> Settings {
        Settings { out: None, ..self.clone() }
    }
}

/// What a subcommand needs from the settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub corpus: bool,
    pub chat: bool,
    pub score: bool,
    pub tagger: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Chat,
    Score,
    Sidecar,
}

impl Endpoint {
    pub fn name(self) -> &'static str {
        match self {
            Endpoint::Chat => "chat",
            Endpoint::Score => "score",
            Endpoint::Sidecar => "sidecar",
        }
    }
}

/// An endpoint is in replay mode when it has a replay file and live mode
/// otherwise; replay never falls through to the network.
#[derive(Debug, Clone, Serialize)]
pub struct EndpointSummary {
    pub mode: &'static str,
    pub base_url: String,
    pub model: String,
    pub temperature: Option<f64>,
}

pub fn check_file(problems: &mut Vec<String>, what: &str, path: Option<&PathBuf>) {
    if let Some(p) = path {
        if !p.is_file() {
            problems.push(format!("{what} `{}` does not exist", p.display()));
        }
    }
}

impl Settings {
    /// Every problem with the settings, not just the first.
    pub fn validate(&self, needs: Needs) -> Vec<String> {
        let mut problems = Vec::new();
        if self.out.is_none() {
            problems.push("--out is required".into());
        }
        if needs.corpus && self.corpus.is_none() {
            problems.push("--corpus is required".into());
        }
        check_file(&mut problems, "corpus", self.corpus.as_ref());
        check_file(&mut problems, "chat replay fixture", self.chat_replay.as_ref());
        check_file(&mut problems, "score replay fixture", self.score_replay.as_ref());
        check_file(&mut problems, "tagger fixture", self.tagger_fixture.as_ref());
        check_file(&mut problems, "quality fixture", self.quality_fixture.as_ref());
        if needs.chat {
            if self.chat_url.is_none() {
                problems.push("--chat-url is required (it also keys replay fixtures)".into());
            }
            if self.chat_model.is_none() {
                problems.push("--chat-model is required".into());
            }
        }
        if needs.score {
            if self.score_url.is_none() {
                problems.push("--score-url is required (it also keys replay fixtures)".into());
            }
            if self.score_model.is_none() {
                problems.push("--score-model is required".into());
            }
        }
        if needs.tagger && self.tagger_fixture.is_none() && self.sidecar_url.is_none() {
            problems.push("a tagger is required: pass --tagger-fixture or --sidecar-url".into());
        }
        if self.concurrency == Some(0) {
            problems.push("--concurrency must be at least 1".into());
        }
        if let Some(t) = self.temperature {
            if !t.is_finite() || t < 0.0 {
                problems.push(format!("--temperature {t} must be a non-negative number"));
            }
        }
        problems
    }

    fn endpoint_parts(&self, which: Endpoint) -> (Option<&String>, Option<&String>, Option<&PathBuf>) {
        match which {
            Endpoint::Chat => (self.chat_url.as_ref(), self.chat_model.as_ref(), self.chat_replay.as_ref()),
            Endpoint::Score => (self.score_url.as_ref(), self.score_model.as_ref(), self.score_replay.as_ref()),
            Endpoint::Sidecar => (self.sidecar_url.as_ref(), None, None),
        }
    }

    pub fn endpoint_summary(&self, which: Endpoint) -> Option<EndpointSummary> {
        let (url, model, replay) = self.endpoint_parts(which);
        let url = url?;
        Some(EndpointSummary {
            mode: if replay.is_some() { "replay" } else { "live" },
            base_url: url.clone(),
            model: model.cloned().unwrap_or_else(|| which.name().to_string()),
            temperature: (which == Endpoint::Chat).then(|| self.temperature.unwrap_or(0.0)),
        })
    }

    pub fn client(&self, which: Endpoint) -> Result<Client> {
        let (url, model, replay) = self.endpoint_parts(which);
        let url = url.with_context(|| format!("no {} endpoint configured", which.name()))?;
        let mut cfg = EndpointConfig::new(url.clone(), model.cloned().unwrap_or_else(|| which.name().to_string()));
        if let Some(n) = self.concurrency {
            cfg.max_concurrency = n;
        }
        if let Some(r) = self.max_retries {
            cfg.max_retries = r;
        }
        if let Some(t) = self.temperature {
            cfg.temperature = t;
        }
        if let Some(path) = replay {
            return Client::with_replay(cfg, path).with_context(|| format!("loading {} replay fixture", which.name()));
        }
        cfg.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        let mut client = Client::live(cfg)?;
        if let Some(dir) = &self.cache_dir {
            client = client.with_cache(ResponseCache::open(dir.join(which.name()))?);
        }
        Ok(client)
    }

    pub fn tagger(&self) -> Result<Option<Box<dyn Tagger>>> {
        if let Some(path) = &self.tagger_fixture {
            return Ok(Some(Box::new(FixtureTagger::load_jsonl(path)?)));
        }
        if self.sidecar_url.is_some() {
            return Ok(Some(Box::new(SidecarTagger::new(Arc::new(self.client(Endpoint::Sidecar)?)))));
        }
        Ok(None)
    }

    pub fn quality(&self) -> Result<Option<Box<dyn QualityEstimator>>> {
        if let Some(path) = &self.quality_fixture {
            return Ok(Some(Box::new(FixtureQuality::load_jsonl(path)?)));
        }
        if self.sidecar_url.is_some() {
            return Ok(Some(Box::new(SidecarQuality::new(Arc::new(self.client(Endpoint::Sidecar)?)))));
        }
        Ok(None)
    }
}
