//! Uniform access to chat-completion backends: a remote HTTP service or a
//! deterministic scripted mock, behind one concurrency limit.

mod http;
mod mock;
mod prompt;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use http::HttpChat;
pub use mock::{ScriptEntry, ScriptedMock};
pub use prompt::{bindings, render_prompt, template, PromptTemplate, TemplateId, CATALOG_VERSION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("missing prompt binding `{0}`")]
    MissingBinding(String),
    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failure after {attempts} attempt(s): {detail}")]
    Transport { detail: String, attempts: u32 },
    #[error("no script entry for request fingerprint {0}")]
    NoScriptEntry(String),
    #[error("credential environment variable `{0}` is not set")]
    AuthMissing(String),
    #[error("no backend named `{0}`")]
    UnknownBackend(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

impl GatewayError {
    /// True for failures of the service itself rather than of the request.
    pub fn is_transport(&self) -> bool {
        matches!(self, GatewayError::Transport { .. } | GatewayError::AuthMissing(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: "user".into(), content: content.into() }
    }
}

/// Template provenance of a request; when present it replaces the message
/// text in the fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateTag {
    pub id: TemplateId,
    pub bindings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
    pub template: Option<TemplateTag>,
    /// Opaque image reference for vision-capable backends.
    pub image_ref: Option<String>,
}

pub const DEFAULT_MAX_TOKENS: u32 = 1000;
pub const DEFAULT_TEMPERATURE: f64 = 0.5;

impl CompletionRequest {
    pub fn new(model_id: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        CompletionRequest {
            model_id: model_id.into(),
            messages,
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            seed: None,
            template: None,
            image_ref: None,
        }
    }

    /// Renders `id` with `bindings` into a single user message.
    pub fn from_template(
        model_id: impl Into<String>,
        id: TemplateId,
        bindings: BTreeMap<String, String>,
    ) -> Result<Self, GatewayError> {
        let text = render_prompt(id, &bindings)?;
        let mut req = CompletionRequest::new(model_id, vec![ChatMessage::user(text)]);
        req.template = Some(TemplateTag { id, bindings });
        Ok(req)
    }

    pub fn with_system(mut self, text: impl Into<String>) -> Self {
        self.messages.insert(0, ChatMessage::system(text));
        self
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn with_max_tokens(mut self, n: u32) -> Self {
        self.max_tokens = n;
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_image(mut self, image_ref: Option<String>) -> Self {
        self.image_ref = image_ref;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest(format!("temperature {} must be finite and >= 0", self.temperature)));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_tokens must be >= 1".into()));
        }
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("no messages".into()));
        }
        Ok(())
    }

    /// Stable hex digest identifying the request for mock scripts.
    ///
    /// Templated requests hash (template id, sorted bindings); others hash
    /// the role/content sequence. The image reference is always included.
    /// Model, temperature and seed are excluded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        match &self.template {
            Some(tag) => {
                h.update(b"template\0");
                h.update(tag.id.as_str().as_bytes());
                for (k, v) in &tag.bindings {
                    h.update(b"\0");
                    h.update(k.as_bytes());
                    h.update(b"\0");
                    h.update(v.as_bytes());
                }
            }
            None => {
                h.update(b"messages\0");
                for m in &self.messages {
                    h.update(m.role.as_bytes());
                    h.update(b"\0");
                    h.update(m.content.as_bytes());
                    h.update(b"\0");
                }
            }
        }
        h.update(b"\x01image\0");
        if let Some(img) = &self.image_ref {
            h.update(img.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    /// Backend output exactly as received.
    pub text: String,
    pub model_id: String,
    pub usage: Usage,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Sleep before attempt k+1 is `backoff_ms[k-1]`; the last entry repeats.
    pub backoff_ms: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_ms: vec![250, 1000],
        }
    }
}

impl RetryPolicy {
    pub fn backoff_before(&self, attempt: u32) -> u64 {
        if attempt <= 1 || self.backoff_ms.is_empty() {
            return 0;
        }
        let idx = (attempt as usize - 2).min(self.backoff_ms.len() - 1);
        self.backoff_ms[idx]
    }
}

pub const DEFAULT_TIMEOUT_MS: u64 = 60_000;

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT_MS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    HttpChat {
        endpoint: String,
        /// Name of the environment variable holding the bearer token.
        #[serde(default)]
        auth_env: Option<String>,
        #[serde(default)]
        retry: RetryPolicy,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
    ScriptedMock {
        #[serde(default)]
        script: BTreeMap<String, ScriptEntry>,
        /// JSON object file merged under `script` (inline entries win).
        #[serde(default)]
        script_file: Option<PathBuf>,
    },
}

impl BackendConfig {
    pub fn is_mock(&self) -> bool {
        matches!(self, BackendConfig::ScriptedMock { .. })
    }
}

/// A chat-completion service.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, GatewayError>;
    /// Network attempts made so far; always zero for offline backends.
    fn network_attempts(&self) -> u64 {
        0
    }
    fn is_mock(&self) -> bool;
}

/// Builds a backend from configuration; relative script paths resolve
/// against `base_dir`.
pub fn build_backend(cfg: &BackendConfig, base_dir: Option<&std::path::Path>) -> Result<Arc<dyn ChatBackend>, GatewayError> {
    match cfg {
        BackendConfig::HttpChat {
            endpoint,
            auth_env,
            retry,
            timeout_ms,
        } => {
            if endpoint.trim().is_empty() {
                return Err(GatewayError::Config("http_chat requires an endpoint".into()));
            }
            if retry.max_attempts == 0 {
                return Err(GatewayError::Config("retry.max_attempts must be >= 1".into()));
            }
            Ok(Arc::new(HttpChat::new(endpoint.clone(), auth_env.clone(), retry.clone(), *timeout_ms)))
        }
        BackendConfig::ScriptedMock { script, script_file } => {
            let mut merged = BTreeMap::new();
            if let Some(path) = script_file {
                let path = match base_dir {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| GatewayError::Config(format!("reading {}: {e}", path.display())))?;
                let loaded: BTreeMap<String, ScriptEntry> = serde_json::from_str(&text)
                    .map_err(|e| GatewayError::Config(format!("parsing {}: {e}", path.display())))?;
                merged.extend(loaded);
            }
            merged.extend(script.clone());
            if merged.is_empty() {
                return Err(GatewayError::Config("scripted_mock requires a non-empty script".into()));
            }
            Ok(Arc::new(ScriptedMock::new(merged)))
        }
    }
}

#[derive(Debug)]
struct Limiter {
    max: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.max {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayCounters {
    pub mock_calls: u64,
    pub http_calls: u64,
    pub http_attempts: u64,
}

/// Named backends sharing a global in-flight limit.
pub struct Gateway {
    backends: BTreeMap<String, Arc<dyn ChatBackend>>,
    limiter: Limiter,
    mock_calls: AtomicU64,
    http_calls: AtomicU64,
}

pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

impl Gateway {
    pub fn new(max_in_flight: usize) -> Self {
        Gateway {
            backends: BTreeMap::new(),
            limiter: Limiter {
                max: max_in_flight.max(1),
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
            },
            mock_calls: AtomicU64::new(0),
            http_calls: AtomicU64::new(0),
        }
    }

    pub fn from_configs(
        configs: &BTreeMap<String, BackendConfig>,
        max_in_flight: usize,
        base_dir: Option<&std::path::Path>,
    ) -> Result<Self, GatewayError> {
        let mut gw = Gateway::new(max_in_flight);
        for (name, cfg) in configs {
            gw.backends.insert(name.clone(), build_backend(cfg, base_dir)?);
        }
        Ok(gw)
    }

    pub fn with_backend(mut self, name: impl Into<String>, backend: Arc<dyn ChatBackend>) -> Self {
        self.backends.insert(name.into(), backend);
        self
    }

    pub fn has_backend(&self, name: &str) -> bool {
        self.backends.contains_key(name)
    }

    pub fn complete(&self, backend: &str, req: &CompletionRequest) -> Result<Completion, GatewayError> {
        let b = self
            .backends
            .get(backend)
            .ok_or_else(|| GatewayError::UnknownBackend(backend.to_string()))?;
        req.validate()?;
        let _permit = self.limiter.acquire();
        if b.is_mock() {
            self.mock_calls.fetch_add(1, Ordering::Relaxed);
        } else {
            self.http_calls.fetch_add(1, Ordering::Relaxed);
        }
        b.complete(req)
    }

    pub fn counters(&self) -> GatewayCounters {
        GatewayCounters {
            mock_calls: self.mock_calls.load(Ordering::Relaxed),
            http_calls: self.http_calls.load(Ordering::Relaxed),
            http_attempts: self.backends.values().map(|b| b.network_attempts()).sum(),
        }
    }
}

/// Whitespace token count used for usage figures where the backend reports
/// none.
pub(crate) fn rough_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}
