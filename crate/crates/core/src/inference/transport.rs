use std::time::Duration;

use crate::{Error, Result};

/// A raw HTTP response as seen by the retry loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    /// Parsed `Retry-After` in seconds, when the server sent one.
    pub retry_after: Option<Duration>,
    pub body: String,
}

/// Sends one JSON POST. Implementations must not retry; the client does.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, api_key: Option<&str>, body: &str, timeout: Duration) -> Result<HttpResponse>;
}

/// Blocking HTTP transport backed by `reqwest`.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn post(&self, url: &str, api_key: Option<&str>, body: &str, timeout: Duration) -> Result<HttpResponse> {
        let mut req = self
            .client
            .post(url)
            .timeout(timeout)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string());
        if let Some(key) = api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s >= 0.0)
            .map(Duration::from_secs_f64);
        let body = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpResponse { status, retry_after, body })
    }
}
