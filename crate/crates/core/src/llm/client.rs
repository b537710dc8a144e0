//! Text-generation clients.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Result, WsiError};

/// Name of the environment variable holding the service token.
pub const TOKEN_ENV: &str = "WSI_API_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub job_id: String,
    pub prompt: String,
    pub max_new_tokens: usize,
    pub seed: Option<u64>,
    pub temperature: Option<f64>,
}

pub trait Client: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String>;
}

/// A client backed by a closure; used for offline runs and tests.
pub struct FnClient<F>(pub F);

impl<F> Client for FnClient<F>
where
    F: Fn(&CompletionRequest) -> Result<String> + Send + Sync,
{
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        (self.0)(request)
    }
}

impl<C: Client + ?Sized> Client for &C {
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        (**self).complete(request)
    }
}

impl<C: Client + ?Sized> Client for Box<C> {
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        (**self).complete(request)
    }
}

/// Chat-completion endpoint at `{base_url}/chat/completions`.
pub struct HttpClient {
    base_url: String,
    model: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl std::fmt::Debug for HttpClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpClient")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpClient {
    /// Reads the token from [`TOKEN_ENV`] when set.
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(600)))
            .build()
            .into();
        HttpClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            token: std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()),
            agent,
        }
    }
}

impl Client for HttpClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_new_tokens,
        });
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }
        if let Some(t) = request.temperature {
            body["temperature"] = json!(t);
        }
        let mut call = self.agent.post(format!("{}/chat/completions", self.base_url));
        if let Some(token) = &self.token {
            call = call.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = call
            .send_json(&body)
            .map_err(|e| WsiError::Client(e.to_string()))?;
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| WsiError::Client(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| WsiError::Client("response has no message content".into()))
    }
}

pub fn prompt_digest(prompt: &str) -> String {
    Sha256::digest(prompt.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Appends one JSON line per successful request: job id, prompt hash, raw response.
pub struct Audited<C> {
    inner: C,
    log: Mutex<File>,
}

impl<C: Client> Audited<C> {
    pub fn new(inner: C, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| WsiError::io(path, e))?;
        Ok(Audited {
            inner,
            log: Mutex::new(log),
        })
    }
}

impl<C: Client> Client for Audited<C> {
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        let response = self.inner.complete(request)?;
        let line = json!({
            "job_id": request.job_id,
            "prompt_sha256": prompt_digest(&request.prompt),
            "response": response,
        });
        let mut log = self.log.lock().expect("audit log lock");
        writeln!(log, "{line}").map_err(|e| WsiError::io("<audit log>", e))?;
        Ok(response)
    }
}

/// Calls `client` up to `attempts` times, returning the first success.
pub fn complete_with_retry(client: &dyn Client, request: &CompletionRequest, attempts: usize) -> Result<String> {
    let mut last = None;
    for attempt in 1..=attempts.max(1) {
        match client.complete(request) {
            Ok(text) => return Ok(text),
            Err(e) => {
                log::warn!("request {} failed (attempt {attempt}): {e}", request.job_id);
                last = Some(e);
            }
        }
    }
    Err(last.unwrap())
}
