//! Client for OpenAI-compatible chat-completion and echo-scoring endpoints.
//!
//! Every request is identified by a SHA-256 digest over the endpoint URL, the
//! model id and the canonicalised JSON body. That digest keys both the
//! on-disk [`ResponseCache`] and the replay fixtures used for hermetic runs.
//! A client built with [`Client::with_replay`] has no network transport at
//! all; requests missing from the fixture fail with
//! [`Error::UnrecordedRequest`].

mod cache;
mod replay;
mod transport;

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use cache::{CacheEntry, ResponseCache};
pub use replay::{write_replay_fixture, ReplayEntry, ReplayStore};
pub use transport::{HttpResponse, HttpTransport, Transport};

use crate::{Error, Result};

/// Environment variable holding the API key for live endpoints.
pub const API_KEY_ENV: &str = "CURATOR_API_KEY";

pub const CHAT_PATH: &str = "chat/completions";
pub const COMPLETIONS_PATH: &str = "completions";

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub max_concurrency: usize,
    pub timeout: Duration,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub backoff_cap: Duration,
    /// Sampling temperature sent with chat requests.
    pub temperature: f64,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            max_concurrency: 4,
            timeout: Duration::from_secs(120),
            max_retries: 3,
            backoff_base: Duration::from_millis(500),
            backoff_cap: Duration::from_secs(30),
            temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_concurrency == 0 {
            return Err(Error::param("max_concurrency must be at least 1"));
        }
        if self.timeout.is_zero() {
            return Err(Error::param("timeout must be positive"));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::param("temperature must be a non-negative number"));
        }
        Ok(())
    }

    pub fn url_for(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }
}

/// Per-token log-probability from an echo-scoring call. The first token of
/// a text usually has no logprob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub token: String,
    pub logprob: Option<f64>,
}

impl TokenScore {
    pub fn new(token: impl Into<String>, logprob: Option<f64>) -> Self {
        TokenScore { token: token.into(), logprob }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }
}

/// Serialises JSON with object keys sorted at every level.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(v, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

/// Hex SHA-256 over endpoint URL, model id and canonical body.
pub fn request_hash(url: &str, model: &str, body: &Value) -> String {
    let mut h = Sha256::new();
    h.update(url.as_bytes());
    h.update(b"\n");
    h.update(model.as_bytes());
    h.update(b"\n");
    h.update(canonical_json(body).as_bytes());
    hex::encode(h.finalize())
}

/// Request body for a chat completion.
pub fn chat_body(cfg: &EndpointConfig, messages: &[ChatMessage]) -> Value {
    json!({
        "model": cfg.model,
        "messages": messages,
        "temperature": cfg.temperature,
    })
}

/// Request body for echo scoring: the text alone, echoed back with logprobs
/// and nothing generated.
pub fn score_body(cfg: &EndpointConfig, text: &str) -> Value {
    json!({
        "model": cfg.model,
        "prompt": text,
        "echo": true,
        "logprobs": 1,
        "max_tokens": 0,
        "temperature": 0.0,
    })
}

/// Counting semaphore bounding in-flight live requests.
struct Limiter {
    max: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(max: usize) -> Self {
        Limiter { max, in_flight: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

enum Backend {
    Live(Box<dyn Transport>),
    Replay(ReplayStore),
}

/// Thread-safe client for one endpoint.
pub struct Client {
    config: EndpointConfig,
    backend: Backend,
    cache: Option<ResponseCache>,
    limiter: Limiter,
    jitter: Mutex<ChaCha8Rng>,
}

impl Client {
    /// Live client over HTTP.
    pub fn live(config: EndpointConfig) -> Result<Self> {
        Self::with_transport(config, Box::new(HttpTransport::new()?))
    }

    pub fn with_transport(config: EndpointConfig, transport: Box<dyn Transport>) -> Result<Self> {
        Self::build(config, Backend::Live(transport))
    }

    /// Client that answers only from the fixture at `path`.
    pub fn with_replay(config: EndpointConfig, path: &std::path::Path) -> Result<Self> {
        Self::build(config, Backend::Replay(ReplayStore::load(path)?))
    }

    pub fn from_replay_store(config: EndpointConfig, store: ReplayStore) -> Result<Self> {
        Self::build(config, Backend::Replay(store))
    }

    fn build(config: EndpointConfig, backend: Backend) -> Result<Self> {
        config.validate()?;
        Ok(Client {
            limiter: Limiter::new(config.max_concurrency),
            jitter: Mutex::new(ChaCha8Rng::seed_from_u64(0x5eed)),
            config,
            backend,
            cache: None,
        })
    }

    /// Serves repeated requests from `cache` and stores fresh responses in
    /// it. Has no effect on replay clients.
    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn is_replay(&self) -> bool {
        matches!(self.backend, Backend::Replay(_))
    }

    pub fn request_hash(&self, path: &str, body: &Value) -> String {
        request_hash(&self.config.url_for(path), &self.config.model, body)
    }

    /// POSTs `body` to `{base_url}/{path}` and returns the response body.
    pub fn post_json(&self, path: &str, body: &Value) -> Result<String> {
        let hash = self.request_hash(path, body);
        let transport = match &self.backend {
            Backend::Replay(store) => return store.get(&hash).map(str::to_owned),
            Backend::Live(t) => t,
        };
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&hash)) {
            return Ok(hit);
        }

        let url = self.config.url_for(path);
        let payload = serde_json::to_string(body)?;
        let attempts = self.config.max_retries + 1;
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = {
                let _permit = self.limiter.acquire();
                transport.post(&url, self.config.api_key.as_deref(), &payload, self.config.timeout)
            };
            let (err, retry_after) = match outcome {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    if let Some(cache) = &self.cache {
                        cache.put(&hash, &resp.body)?;
                    }
                    return Ok(resp.body);
                }
                Ok(resp) => (Error::HttpStatus { status: resp.status, body: resp.body }, resp.retry_after),
                Err(e) => (e, None),
            };
            if !err.is_transient() {
                return Err(err);
            }
            if attempt >= attempts {
                return Err(Error::RetriesExhausted { attempts, last: Box::new(err) });
            }
            log::debug!("attempt {attempt}/{attempts} to {url} failed: {err}");
            std::thread::sleep(self.backoff(attempt, retry_after));
        }
    }

    /// Exponential backoff with jitter in [50%, 100%] of the nominal delay,
    /// never shorter than the server's Retry-After, always within the cap.
    fn backoff(&self, attempt: u32, retry_after: Option<Duration>) -> Duration {
        let cap = self.config.backoff_cap.as_secs_f64();
        let nominal = (self.config.backoff_base.as_secs_f64() * 2f64.powi(attempt as i32 - 1)).min(cap);
        let factor = self.jitter.lock().unwrap_or_else(|e| e.into_inner()).gen_range(0.5..=1.0);
        let delay = (nominal * factor).max(retry_after.map_or(0.0, |d| d.as_secs_f64()));
        Duration::from_secs_f64(delay.min(cap))
    }

    /// Sends a chat conversation and returns the assistant's text.
    pub fn chat_complete(&self, messages: &[ChatMessage]) -> Result<String> {
        match messages.first() {
            None => return Err(Error::param("chat requires at least one message")),
            Some(m) if m.role == Role::Assistant => {
                return Err(Error::param("first chat message must be from system or user"))
            }
            Some(_) => {}
        }
        let raw = self.post_json(CHAT_PATH, &chat_body(&self.config, messages))?;
        parse_chat_response(&raw)
    }

    /// Scores `text` alone (no prompt or source context) and returns the
    /// endpoint's tokens with their logprobs.
    pub fn score_text(&self, text: &str) -> Result<Vec<TokenScore>> {
        if text.is_empty() {
            return Err(Error::param("cannot score empty text"));
        }
        let raw = self.post_json(COMPLETIONS_PATH, &score_body(&self.config, text))?;
        parse_score_response(&raw)
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: Option<String>,
}

pub fn parse_chat_response(raw: &str) -> Result<String> {
    let resp: ChatResponse =
        serde_json::from_str(raw).map_err(|e| Error::MalformedResponse(format!("chat: {e}")))?;
    resp.choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| Error::MalformedResponse("chat: no message content".into()))
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<CompletionChoice>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    logprobs: Option<Logprobs>,
}

#[derive(Deserialize)]
struct Logprobs {
    tokens: Vec<String>,
    token_logprobs: Vec<Option<f64>>,
}

/// Logprobs this far above zero are treated as float noise and clamped.
const LOGPROB_SLACK: f64 = 1e-6;

pub fn parse_score_response(raw: &str) -> Result<Vec<TokenScore>> {
    let resp: CompletionResponse =
        serde_json::from_str(raw).map_err(|e| Error::MalformedResponse(format!("completions: {e}")))?;
    let choice = resp
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| Error::MalformedResponse("completions: no choices".into()))?;
    let lp = choice.logprobs.ok_or(Error::NoLogprobs)?;
    if lp.tokens.len() != lp.token_logprobs.len() {
        return Err(Error::MalformedResponse(format!(
            "{} tokens but {} logprobs",
            lp.tokens.len(),
            lp.token_logprobs.len()
        )));
    }
    if lp.token_logprobs.iter().all(Option::is_none) {
        return Err(Error::NoLogprobs);
    }
    lp.tokens
        .into_iter()
        .zip(lp.token_logprobs)
        .map(|(token, logprob)| {
            let logprob = match logprob {
                Some(v) if !v.is_finite() || v > LOGPROB_SLACK => {
                    return Err(Error::MalformedResponse(format!("invalid logprob {v} for `{token}`")))
                }
                Some(v) => Some(v.min(0.0)),
                None => None,
            };
            Ok(TokenScore { token, logprob })
        })
        .collect()
}

/// Builds the response body an echo-scoring endpoint would return for these
/// tokens. Used to author replay fixtures.
pub fn score_response_body(scores: &[TokenScore]) -> String {
    let tokens: Vec<&str> = scores.iter().map(|s| s.token.as_str()).collect();
    let logprobs: Vec<Option<f64>> = scores.iter().map(|s| s.logprob).collect();
    json!({
        "object": "text_completion",
        "choices": [{
            "index": 0,
            "text": tokens.concat(),
            "logprobs": { "tokens": tokens, "token_logprobs": logprobs },
            "finish_reason": "length",
        }],
    })
    .to_string()
}

/// Builds a chat-completions response body carrying `content`.
pub fn chat_response_body(content: &str) -> String {
    json!({
        "object": "chat.completion",
        "choices": [{
            "index": 0,
            "message": { "role": "assistant", "content": content },
            "finish_reason": "stop",
        }],
    })
    .to_string()
}
