//! Chat-completion client for an OpenAI-compatible endpoint.
//!
//! This is the only module that performs network IO. Requests go through a
//! [`Transport`] so tests can script responses; responses are cached on
//! disk by a hash of the request.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::naturalizer::{build_translation_prompt, ingest_llm_translation, NlTrace, ThinkDelimiters};
use crate::prompts;
use crate::runtime::ExecutionTrace;

pub const ENV_ENDPOINT: &str = "TRACECOT_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "TRACECOT_LLM_API_KEY";
pub const ENV_MODEL: &str = "TRACECOT_LLM_MODEL";

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("network failure after {attempts} attempt(s): {message}")]
    Network { attempts: u32, message: String },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("request still contains the template slot {{{0}}}")]
    UnfilledSlot(&'static str),
    #[error("gateway misconfigured: {0}")]
    Config(String),
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::Network { .. } => "network_error",
            GatewayError::RateLimited { .. } => "rate_limited",
            GatewayError::Auth { .. } => "auth_error",
            GatewayError::Http { .. } => "http_error",
            GatewayError::Malformed(_) => "malformed_response",
            GatewayError::UnfilledSlot(_) => "unfilled_template_slot",
            GatewayError::Config(_) => "gateway_config",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    pub max_tokens: u32,
    /// Forwarded untouched to endpoints that understand it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enable_thinking: Option<bool>,
}

impl SamplingConfig {
    /// Settings used to generate translations.
    pub fn translation() -> Self {
        SamplingConfig { temperature: 0.6, top_p: 0.95, top_k: Some(20), max_tokens: 16382, enable_thinking: None }
    }

    /// Greedy decoding for evaluation and judging.
    pub fn evaluation() -> Self {
        SamplingConfig { temperature: 0.0, ..Self::translation() }
    }

    pub fn check(&self) -> Result<(), GatewayError> {
        // negated so that NaN is rejected too
        if !(self.temperature >= 0.0) {
            return Err(GatewayError::Config("temperature must be non-negative".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GatewayError::Config("top_p must be in (0, 1]".into()));
        }
        if self.top_k == Some(0) || self.max_tokens == 0 {
            return Err(GatewayError::Config("top_k and max_tokens must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self::translation()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Message { role: role.to_string(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub sampling: SamplingConfig,
}

impl ChatRequest {
    fn wire_body(&self) -> serde_json::Value {
        let mut body = json!({
            "model": self.model,
            "messages": self.messages,
            "temperature": self.sampling.temperature,
            "top_p": self.sampling.top_p,
            "max_tokens": self.sampling.max_tokens,
        });
        if let Some(k) = self.sampling.top_k {
            body["top_k"] = json!(k);
        }
        if let Some(t) = self.sampling.enable_thinking {
            body["chat_template_kwargs"] = json!({ "enable_thinking": t });
        }
        body
    }

    /// Stable cache key: sha256 of the wire body.
    pub fn cache_key(&self) -> String {
        hex::encode(Sha256::digest(self.wire_body().to_string().as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub finish_reason: FinishReason,
    #[serde(default)]
    pub usage: Usage,
    /// Retries spent on this request; zero for cache hits.
    #[serde(skip)]
    pub retries: u32,
    #[serde(skip)]
    pub backoff_ms: Vec<u64>,
    #[serde(skip)]
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// One HTTP POST. `Err` means no HTTP status was received at all.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, api_key: Option<&str>, body: &str) -> Result<HttpReply, String>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        HttpTransport { agent: ureq::AgentBuilder::new().timeout(timeout).build() }
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, api_key: Option<&str>, body: &str) -> Result<HttpReply, String> {
        let mut req = self.agent.post(url).set("Content-Type", "application/json");
        if let Some(key) = api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        match req.send_string(body) {
            Ok(resp) => {
                let status = resp.status();
                resp.into_string().map(|body| HttpReply { status, body }).map_err(|e| e.to_string())
            }
            Err(ureq::Error::Status(status, resp)) => Ok(HttpReply { status, body: resp.into_string().unwrap_or_default() }),
            Err(ureq::Error::Transport(t)) => Err(t.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub timeout_secs: u64,
    pub cache_dir: Option<PathBuf>,
    pub think: ThinkDelimiters,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            endpoint: String::new(),
            api_key: None,
            model: String::new(),
            max_retries: 4,
            initial_backoff_ms: 500,
            max_backoff_ms: 30_000,
            timeout_secs: 600,
            cache_dir: None,
            think: ThinkDelimiters::default(),
        }
    }
}

impl GatewayConfig {
    /// Fills endpoint, credential and model from the environment where unset.
    pub fn with_env(mut self) -> Self {
        let var = |name| std::env::var(name).ok().filter(|v: &String| !v.is_empty());
        if self.endpoint.is_empty() {
            self.endpoint = var(ENV_ENDPOINT).unwrap_or_default();
        }
        if self.api_key.is_none() {
            self.api_key = var(ENV_API_KEY);
        }
        if self.model.is_empty() {
            self.model = var(ENV_MODEL).unwrap_or_default();
        }
        self
    }

    pub fn backoff(&self, retry: u32) -> Duration {
        let ms = self.initial_backoff_ms.saturating_mul(1u64 << retry.min(20));
        Duration::from_millis(ms.min(self.max_backoff_ms))
    }
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

pub struct Gateway {
    config: GatewayConfig,
    transport: Box<dyn Transport>,
    sleep: Sleeper,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self, GatewayError> {
        let timeout = Duration::from_secs(config.timeout_secs.max(1));
        Self::with_transport(config, Box::new(HttpTransport::new(timeout)))
    }

    pub fn with_transport(config: GatewayConfig, transport: Box<dyn Transport>) -> Result<Self, GatewayError> {
        if config.endpoint.is_empty() {
            return Err(GatewayError::Config(format!("no endpoint configured (set {ENV_ENDPOINT})")));
        }
        if config.model.is_empty() {
            return Err(GatewayError::Config(format!("no model configured (set {ENV_MODEL})")));
        }
        Ok(Gateway { config, transport, sleep: Arc::new(std::thread::sleep) })
    }

    /// Replaces the backoff sleep, e.g. to record delays in tests.
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Arc::new(sleep);
        self
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn request(&self, messages: Vec<Message>, sampling: SamplingConfig) -> ChatRequest {
        ChatRequest { model: self.config.model.clone(), messages, sampling }
    }

    fn cache_path(&self, req: &ChatRequest) -> Option<PathBuf> {
        self.config.cache_dir.as_ref().map(|d| d.join(format!("{}.json", req.cache_key())))
    }

    pub fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        if req.messages.is_empty() {
            return Err(GatewayError::Config("request has no messages".into()));
        }
        if let Some(slot) = req.messages.iter().find_map(|m| prompts::unfilled_slot(&m.content)) {
            return Err(GatewayError::UnfilledSlot(slot));
        }
        req.sampling.check()?;

        let cache = self.cache_path(req);
        if let Some(path) = &cache {
            if let Ok(text) = std::fs::read_to_string(path) {
                if let Ok(mut resp) = serde_json::from_str::<ChatResponse>(&text) {
                    tracing::debug!(key = %req.cache_key(), "cache hit");
                    resp.cached = true;
                    return Ok(resp);
                }
            }
        }

        let body = req.wire_body().to_string();
        let mut backoff_ms = Vec::new();
        let mut attempt: u32 = 0;
        let resp = loop {
            attempt += 1;
            let outcome = self.transport.post_json(&self.config.endpoint, self.config.api_key.as_deref(), &body);
            let retryable = match outcome {
                Ok(reply) if (200..300).contains(&reply.status) => break parse_response(&reply.body)?,
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    tracing::error!(status = reply.status, attempt, "authentication rejected; not retrying");
                    return Err(GatewayError::Auth { status: reply.status });
                }
                Ok(reply) if reply.status == 429 => GatewayError::RateLimited { attempts: attempt },
                Ok(reply) if reply.status >= 500 => {
                    GatewayError::Network { attempts: attempt, message: format!("HTTP {}", reply.status) }
                }
                Ok(reply) => return Err(GatewayError::Http { status: reply.status, body: truncate(&reply.body, 200) }),
                Err(message) => GatewayError::Network { attempts: attempt, message },
            };
            let retry = attempt - 1;
            if retry >= self.config.max_retries {
                tracing::error!(attempt, error = %retryable, "retries exhausted");
                return Err(retryable);
            }
            let delay = self.config.backoff(retry);
            tracing::warn!(attempt, delay_ms = delay.as_millis() as u64, error = %retryable, "retrying request");
            backoff_ms.push(delay.as_millis() as u64);
            (self.sleep)(delay);
        };

        let resp = ChatResponse { retries: attempt - 1, backoff_ms, cached: false, ..resp };
        tracing::info!(retries = resp.retries, backoff_ms = ?resp.backoff_ms, "completion received");
        if let Some(path) = &cache {
            if let Some(dir) = path.parent() {
                let _ = std::fs::create_dir_all(dir);
            }
            let stored = serde_json::to_string_pretty(&resp).expect("response serializes");
            if let Err(e) = std::fs::write(path, stored) {
                tracing::warn!(path = %path.display(), error = %e, "could not write cache entry");
            }
        }
        Ok(resp)
    }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

fn parse_response(body: &str) -> Result<ChatResponse, GatewayError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| GatewayError::Malformed(e.to_string()))?;
    let choice = v["choices"].get(0).ok_or_else(|| GatewayError::Malformed("no choices".into()))?;
    let content = choice["message"]["content"]
        .as_str()
        .ok_or_else(|| GatewayError::Malformed("choice has no message content".into()))?
        .to_string();
    let finish_reason = match choice["finish_reason"].as_str() {
        Some("stop") | None => FinishReason::Stop,
        Some("length") => FinishReason::Length,
        Some(_) => FinishReason::Error,
    };
    let usage = Usage {
        prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
        completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
    };
    Ok(ChatResponse { content, finish_reason, usage, retries: 0, backoff_ms: vec![], cached: false })
}

/// Translation step: prompt, complete, then ingest with grounding checks.
pub fn translate(
    gateway: &Gateway,
    question: &str,
    input_repr: &str,
    trace_text: &str,
    trace: &ExecutionTrace,
    sampling: &SamplingConfig,
) -> crate::Result<NlTrace> {
    let prompt = build_translation_prompt(question, input_repr, trace_text)?;
    let req = gateway.request(
        vec![Message::new("system", prompt.system_text), Message::new("user", prompt.user_text)],
        sampling.clone(),
    );
    let resp = gateway.complete(&req)?;
    ingest_llm_translation(&resp.content, trace, question, &gateway.config.think)
}

/// Asks the model to answer a user prompt directly, without a trace.
pub fn solve(gateway: &Gateway, user_prompt: &str, sampling: &SamplingConfig) -> Result<ChatResponse, GatewayError> {
    let req = gateway.request(
        vec![Message::new("system", prompts::SYSTEM_TEXT), Message::new("user", user_prompt)],
        sampling.clone(),
    );
    gateway.complete(&req)
}

/// Optional model-based check that `answer` reaches `ground_truth`.
pub fn judge_output(gateway: &Gateway, question: &str, answer: &str, ground_truth: &str) -> Result<bool, GatewayError> {
    let user = format!(
        "Question:\n{question}\n\nProposed solution:\n{answer}\n\nReference output:\n{ground_truth}\n\n\
         Does the proposed solution reach the reference output? Reply with exactly one word: yes or no."
    );
    let req = gateway.request(
        vec![Message::new("system", prompts::SYSTEM_TEXT), Message::new("user", user)],
        SamplingConfig { max_tokens: 2048, ..SamplingConfig::evaluation() },
    );
    let resp = gateway.complete(&req)?;
    let verdict = crate::naturalizer::strip_thinking(&resp.content, &gateway.config.think).trim().to_ascii_lowercase();
    Ok(verdict.starts_with("yes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let t = SamplingConfig::translation();
        assert_eq!((t.temperature, t.top_p, t.top_k, t.max_tokens), (0.6, 0.95, Some(20), 16382));
        assert_eq!(SamplingConfig::evaluation().temperature, 0.0);
        assert!(SamplingConfig { top_p: 0.0, ..t.clone() }.check().is_err());
    }

    #[test]
    fn backoff_doubles_up_to_cap() {
        let c = GatewayConfig { initial_backoff_ms: 100, max_backoff_ms: 350, ..GatewayConfig::default() };
        let ms: Vec<u128> = (0..4).map(|i| c.backoff(i).as_millis()).collect();
        assert_eq!(ms, [100, 200, 350, 350]);
    }

    #[test]
    fn wire_body_passthrough() {
        let req = ChatRequest {
            model: "m".into(),
            messages: vec![Message::new("user", "hi")],
            sampling: SamplingConfig { enable_thinking: Some(true), ..SamplingConfig::translation() },
        };
        let body = req.wire_body();
        assert_eq!(body["chat_template_kwargs"]["enable_thinking"], json!(true));
        assert_eq!(body["top_k"], json!(20));
        assert_eq!(req.cache_key(), req.clone().cache_key());
    }

    #[test]
    fn response_parsing() {
        let r = parse_response(r#"{"choices":[{"message":{"content":"x"},"finish_reason":"length"}],"usage":{"prompt_tokens":3,"completion_tokens":4}}"#)
            .unwrap();
        assert_eq!((r.content.as_str(), r.finish_reason, r.usage.completion_tokens), ("x", FinishReason::Length, 4));
        assert!(matches!(parse_response("{}"), Err(GatewayError::Malformed(_))));
        assert!(matches!(parse_response("not json"), Err(GatewayError::Malformed(_))));
    }
}
