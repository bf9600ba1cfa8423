use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{rough_tokens, ChatBackend, Completion, CompletionRequest, GatewayError, RetryPolicy, Usage};

/// Chat-completion client speaking the common `messages` JSON protocol.
///
/// Connection failures, timeouts, 429 and 5xx responses are retried up to
/// `retry.max_attempts` in total; other statuses fail immediately.
pub struct HttpChat {
    endpoint: String,
    auth_env: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
    attempts: AtomicU64,
}

enum AttemptError {
    Retryable(String),
    Fatal(String),
}

impl HttpChat {
    pub fn new(endpoint: String, auth_env: Option<String>, retry: RetryPolicy, timeout_ms: u64) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(timeout_ms))
            .build();
        HttpChat {
            endpoint,
            auth_env,
            retry,
            agent,
            attempts: AtomicU64::new(0),
        }
    }

    fn body(req: &CompletionRequest) -> Value {
        let last_user = req.messages.iter().rposition(|m| m.role == "user");
        let messages: Vec<Value> = req
            .messages
            .iter()
            .enumerate()
            .map(|(i, m)| match (&req.image_ref, Some(i) == last_user) {
                (Some(img), true) => json!({
                    "role": m.role,
                    "content": [
                        {"type": "text", "text": m.content},
                        {"type": "image_url", "image_url": {"url": img}},
                    ],
                }),
                _ => json!({"role": m.role, "content": m.content}),
            })
            .collect();
        let mut body = json!({
            "model": req.model_id,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        if let Some(seed) = req.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn attempt(&self, token: Option<&str>, payload: &str) -> Result<String, AttemptError> {
        self.attempts.fetch_add(1, Ordering::Relaxed);
        let mut call = self.agent.post(&self.endpoint).set("Content-Type", "application/json");
        if let Some(t) = token {
            call = call.set("Authorization", &format!("Bearer {t}"));
        }
        match call.send_string(payload) {
            Ok(resp) => resp
                .into_string()
                .map_err(|e| AttemptError::Retryable(format!("reading response: {e}"))),
            Err(ureq::Error::Status(code, resp)) => {
                let detail = format!("HTTP {code}: {}", resp.into_string().unwrap_or_default());
                if code == 429 || code >= 500 {
                    Err(AttemptError::Retryable(detail))
                } else {
                    Err(AttemptError::Fatal(detail))
                }
            }
            Err(ureq::Error::Transport(t)) => Err(AttemptError::Retryable(t.to_string())),
        }
    }

    fn parse(text: &str, req: &CompletionRequest) -> Result<(String, Usage), String> {
        let v: Value = serde_json::from_str(text).map_err(|e| format!("response is not JSON: {e}"))?;
        let content = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .or_else(|| v.pointer("/choices/0/text").and_then(Value::as_str))
            .ok_or("response has no choices[0].message.content")?
            .to_string();
        let usage = Usage {
            prompt_tokens: v
                .pointer("/usage/prompt_tokens")
                .and_then(Value::as_u64)
                .unwrap_or_else(|| req.messages.iter().map(|m| rough_tokens(&m.content)).sum()),
            completion_tokens: v
                .pointer("/usage/completion_tokens")
                .and_then(Value::as_u64)
                .unwrap_or_else(|| rough_tokens(&content)),
        };
        Ok((content, usage))
    }
}

impl ChatBackend for HttpChat {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, GatewayError> {
        let token = match &self.auth_env {
            Some(name) => Some(std::env::var(name).map_err(|_| GatewayError::AuthMissing(name.clone()))?),
            None => None,
        };
        let payload = Self::body(req).to_string();
        let started = Instant::now();
        let mut last = String::new();
        for attempt in 1..=self.retry.max_attempts {
            let wait = self.retry.backoff_before(attempt);
            if wait > 0 {
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.attempt(token.as_deref(), &payload) {
                Ok(text) => {
                    let (content, usage) = Self::parse(&text, req)
                        .map_err(|detail| GatewayError::Transport { detail, attempts: attempt })?;
                    return Ok(Completion {
                        text: content,
                        model_id: req.model_id.clone(),
                        usage,
                        latency_ms: started.elapsed().as_millis() as u64,
                    });
                }
                Err(AttemptError::Fatal(detail)) => return Err(GatewayError::Transport { detail, attempts: attempt }),
                Err(AttemptError::Retryable(detail)) => {
                    log::warn!("attempt {attempt}/{} to {} failed: {detail}", self.retry.max_attempts, self.endpoint);
                    last = detail;
                }
            }
        }
        Err(GatewayError::Transport {
            detail: last,
            attempts: self.retry.max_attempts,
        })
    }

    fn network_attempts(&self) -> u64 {
        self.attempts.load(Ordering::Relaxed)
    }

    fn is_mock(&self) -> bool {
        false
    }
}
