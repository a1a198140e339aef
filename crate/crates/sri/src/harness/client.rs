use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sri_core::prompting::{PromptBody, PromptBundle};
use thiserror::Error;

pub const API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    HttpStatus(u16),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("max_output_tokens must be positive")]
    ZeroMaxTokens,
    #[error("temperature must be a non-negative number")]
    BadTemperature,
    #[error("max_concurrency must be positive")]
    ZeroConcurrency,
    #[error("retry attempts must be positive")]
    ZeroAttempts,
    #[error("endpoint URL is empty")]
    NoEndpoint,
    #[error("building HTTP client: {0}")]
    Client(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total tries per request, including the first.
    pub attempts: u32,
    /// Delay before the second try; doubles after each further failure.
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            backoff_ms: 500,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, failed_attempts: u32) -> Duration {
        let factor = 1u64 << failed_attempts.saturating_sub(1).min(16);
        Duration::from_millis(self.backoff_ms.saturating_mul(factor))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    /// Base URL such as `http://localhost:8000/v1`, or a full
    /// `.../chat/completions` URL.
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default)]
    pub presence_penalty: f64,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

fn default_max_tokens() -> u32 {
    256
}

fn default_concurrency() -> usize {
    8
}

fn default_timeout() -> u64 {
    120
}

impl InferenceConfig {
    pub fn new(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            temperature: 0.0,
            max_output_tokens: default_max_tokens(),
            presence_penalty: 0.0,
            max_concurrency: default_concurrency(),
            retry: RetryPolicy::default(),
            timeout_secs: default_timeout(),
            api_key: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.endpoint_url.trim().is_empty() {
            return Err(ConfigError::NoEndpoint);
        }
        if self.max_output_tokens == 0 {
            return Err(ConfigError::ZeroMaxTokens);
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ConfigError::BadTemperature);
        }
        if self.max_concurrency == 0 {
            return Err(ConfigError::ZeroConcurrency);
        }
        if self.retry.attempts == 0 {
            return Err(ConfigError::ZeroAttempts);
        }
        Ok(())
    }

    pub fn chat_url(&self) -> String {
        let base = self.endpoint_url.trim_end_matches('/');
        if base.ends_with("/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    pub fn completions_url(&self) -> String {
        let base = self.endpoint_url.trim_end_matches('/');
        if let Some(root) = base.strip_suffix("/chat/completions") {
            format!("{root}/completions")
        } else if base.ends_with("/completions") {
            base.to_string()
        } else {
            format!("{base}/completions")
        }
    }
}

/// Result of one logical request, however many tries it took.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub result: Result<String, ClientError>,
    pub attempts: u32,
}

pub trait CompletionClient: Sync {
    fn complete(&self, bundle: &PromptBundle) -> Completion;
}

/// Request body for a bundle: chat messages, or a raw prompt for FIM.
pub fn request_body(bundle: &PromptBundle, cfg: &InferenceConfig) -> Value {
    let mut body = json!({
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_output_tokens,
        "presence_penalty": cfg.presence_penalty,
    });
    match &bundle.body {
        PromptBody::Chat { system, user } => {
            body["messages"] = json!([
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ]);
        }
        PromptBody::Raw { prompt } => body["prompt"] = json!(prompt),
    }
    body
}

/// First choice's text from a chat or completions response.
pub fn response_text(body: &str) -> Result<String, ClientError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ClientError::MalformedResponse(e.to_string()))?;
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| ClientError::MalformedResponse("no choices".into()))?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ClientError::MalformedResponse("choice has no text".into()))
}

fn retryable(err: &ClientError) -> bool {
    match err {
        ClientError::Transport(_) => true,
        ClientError::HttpStatus(code) => *code == 429 || *code >= 500,
        ClientError::MalformedResponse(_) => false,
    }
}

/// Runs `once` until it succeeds, fails permanently, or the policy is spent.
pub fn with_retry(policy: &RetryPolicy, mut once: impl FnMut() -> Result<String, ClientError>) -> Completion {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let result = once();
        match &result {
            Err(e) if retryable(e) && attempts < policy.attempts => thread::sleep(policy.delay(attempts)),
            _ => return Completion { result, attempts },
        }
    }
}

/// OpenAI-compatible HTTP client.
pub struct HttpClient {
    cfg: InferenceConfig,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(cfg: InferenceConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| ConfigError::Client(e.to_string()))?;
        Ok(Self { cfg, http })
    }

    pub fn config(&self) -> &InferenceConfig {
        &self.cfg
    }

    fn send(&self, url: &str, body: &Value) -> Result<String, ClientError> {
        let mut req = self.http.post(url).json(body);
        if let Some(key) = &self.cfg.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ClientError::HttpStatus(status.as_u16()));
        }
        let text = resp.text().map_err(|e| ClientError::Transport(e.to_string()))?;
        response_text(&text)
    }
}

impl CompletionClient for HttpClient {
    fn complete(&self, bundle: &PromptBundle) -> Completion {
        let url = match bundle.body {
            PromptBody::Chat { .. } => self.cfg.chat_url(),
            PromptBody::Raw { .. } => self.cfg.completions_url(),
        };
        let body = request_body(bundle, &self.cfg);
        with_retry(&self.cfg.retry, || self.send(&url, &body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sri_core::prompting::PromptStyle;

    #[test]
    fn urls() {
        let cfg = InferenceConfig::new("http://h/v1/", "m");
        assert_eq!(cfg.chat_url(), "http://h/v1/chat/completions");
        assert_eq!(cfg.completions_url(), "http://h/v1/completions");
        let full = InferenceConfig::new("http://h/v1/chat/completions", "m");
        assert_eq!(full.chat_url(), "http://h/v1/chat/completions");
        assert_eq!(full.completions_url(), "http://h/v1/completions");
    }

    #[test]
    fn chat_body_fields() {
        let bundle = PromptBundle {
            style: PromptStyle::Sri,
            body: PromptBody::Chat {
                system: "s".into(),
                user: "u".into(),
            },
        };
        let b = request_body(&bundle, &InferenceConfig::new("x", "m"));
        assert_eq!(b["max_tokens"], 256);
        assert_eq!(b["temperature"], 0.0);
        assert_eq!(b["presence_penalty"], 0.0);
        assert_eq!(b["messages"][1]["content"], "u");
    }

    #[test]
    fn parses_both_response_shapes() {
        let chat = r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}]}"#;
        let raw = r#"{"choices":[{"text":"yo"}]}"#;
        assert_eq!(response_text(chat).unwrap(), "hi");
        assert_eq!(response_text(raw).unwrap(), "yo");
        assert!(matches!(response_text("{}"), Err(ClientError::MalformedResponse(_))));
        assert!(matches!(response_text("<html>"), Err(ClientError::MalformedResponse(_))));
    }

    #[test]
    fn retry_stops_on_success_and_on_permanent_errors() {
        let policy = RetryPolicy {
            attempts: 5,
            backoff_ms: 0,
        };
        let mut calls = 0;
        let c = with_retry(&policy, || {
            calls += 1;
            if calls < 3 {
                Err(ClientError::HttpStatus(500))
            } else {
                Ok("ok".into())
            }
        });
        assert_eq!((c.result, c.attempts), (Ok("ok".into()), 3));

        let c = with_retry(&policy, || Err(ClientError::HttpStatus(400)));
        assert_eq!(c.attempts, 1);

        let c = with_retry(&policy, || Err(ClientError::Transport("refused".into())));
        assert_eq!(c.attempts, 5);
    }

    #[test]
    fn config_validation() {
        let mut cfg = InferenceConfig::new("http://x", "m");
        assert!(cfg.validate().is_ok());
        cfg.max_output_tokens = 0;
        assert!(matches!(cfg.validate(), Err(ConfigError::ZeroMaxTokens)));
        cfg.max_output_tokens = 1;
        cfg.temperature = f64::NAN;
        assert!(matches!(cfg.validate(), Err(ConfigError::BadTemperature)));
    }
}
