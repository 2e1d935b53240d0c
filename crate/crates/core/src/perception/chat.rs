//! Client for OpenAI-compatible `/v1/chat/completions` endpoints.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::PerceptionError;

pub const ENV_ENDPOINT: &str = "DSM_CHAT_ENDPOINT";
pub const ENV_API_KEY: &str = "DSM_CHAT_API_KEY";
pub const ENV_MODEL: &str = "DSM_CHAT_MODEL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub text: String,
    /// Base64-encoded PNG attachments.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<String>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn with_image_png(mut self, png_base64: String) -> Self {
        self.images.push(png_base64);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    /// Request with temperature 0, as used by every pipeline call.
    pub fn new(model: impl Into<String>, messages: Vec<ChatMessage>, max_tokens: u32) -> Self {
        Self {
            model: model.into(),
            messages,
            temperature: 0.0,
            max_tokens,
        }
    }

    /// Body in the chat-completions wire format, images as `data:` URLs.
    pub fn to_wire(&self) -> serde_json::Value {
        let messages: Vec<_> = self
            .messages
            .iter()
            .map(|m| {
                if m.images.is_empty() {
                    json!({ "role": m.role, "content": m.text })
                } else {
                    let mut parts = vec![json!({ "type": "text", "text": m.text })];
                    parts.extend(m.images.iter().map(|b64| {
                        json!({
                            "type": "image_url",
                            "image_url": { "url": format!("data:image/png;base64,{b64}") }
                        })
                    }));
                    json!({ "role": m.role, "content": parts })
                }
            })
            .collect();
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub finish_reason: String,
    pub usage: Usage,
}

impl ChatResponse {
    pub fn from_wire(body: &str) -> Result<Self, PerceptionError> {
        let v: serde_json::Value =
            serde_json::from_str(body).map_err(|e| PerceptionError::Response(e.to_string()))?;
        let choice = v["choices"]
            .get(0)
            .ok_or_else(|| PerceptionError::Response("no choices".into()))?;
        let text = choice["message"]["content"]
            .as_str()
            .ok_or_else(|| PerceptionError::Response("choice has no text content".into()))?
            .to_string();
        let finish_reason = choice["finish_reason"].as_str().unwrap_or("").to_string();
        let usage = serde_json::from_value(v["usage"].clone()).unwrap_or_default();
        Ok(Self {
            text,
            finish_reason,
            usage,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportFailure {
    Timeout,
    Connection(String),
}

/// Minimal blocking HTTP POST, so the retry policy can be tested without a network.
pub trait HttpTransport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &str,
        timeout: Duration,
    ) -> Result<HttpReply, TransportFailure>;
}

#[derive(Debug, Default)]
pub struct UreqTransport;

impl HttpTransport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &str,
        timeout: Duration,
    ) -> Result<HttpReply, TransportFailure> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(url).header("Content-Type", "application/json");
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        match req.send(body) {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                let body = resp.body_mut().read_to_string().unwrap_or_default();
                Ok(HttpReply { status, body })
            }
            Err(ureq::Error::Timeout(_)) => Err(TransportFailure::Timeout),
            Err(ureq::Error::Io(e)) if e.kind() == std::io::ErrorKind::TimedOut => {
                Err(TransportFailure::Timeout)
            }
            Err(e) => Err(TransportFailure::Connection(e.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChatConfig {
    /// Base URL; `/v1/chat/completions` is appended unless already present.
    pub endpoint: String,
    pub api_key: String,
    pub model: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub max_in_flight: usize,
}

impl ChatConfig {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            model: model.into(),
            timeout: Duration::from_secs(60),
            max_retries: 2,
            backoff_base: Duration::from_millis(500),
            max_in_flight: 4,
        }
    }

    /// Reads endpoint, key and model from the environment.
    pub fn from_env() -> Result<Self, PerceptionError> {
        let get = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let endpoint = get(ENV_ENDPOINT).ok_or_else(|| PerceptionError::NotConfigured(format!("{ENV_ENDPOINT} is not set")))?;
        let api_key = get(ENV_API_KEY).ok_or_else(|| PerceptionError::NotConfigured(format!("{ENV_API_KEY} is not set")))?;
        let model = get(ENV_MODEL).unwrap_or_else(|| "gpt-4o-mini".into());
        Ok(Self::new(endpoint, api_key, model))
    }

    pub fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else if base.ends_with("/v1") {
            format!("{base}/chat/completions")
        } else {
            format!("{base}/v1/chat/completions")
        }
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        SemaphoreGuard(self)
    }
}

struct SemaphoreGuard<'a>(&'a Semaphore);

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

/// Chat-completion client with bounded retries and an in-flight cap.
pub struct ChatClient {
    config: ChatConfig,
    transport: Box<dyn HttpTransport>,
    slots: Semaphore,
}

impl ChatClient {
    pub fn new(config: ChatConfig) -> Self {
        Self::with_transport(config, Box::new(UreqTransport))
    }

    pub fn with_transport(config: ChatConfig, transport: Box<dyn HttpTransport>) -> Self {
        let slots = Semaphore {
            free: Mutex::new(config.max_in_flight.max(1)),
            cv: Condvar::new(),
        };
        Self {
            config,
            transport,
            slots,
        }
    }

    pub fn config(&self) -> &ChatConfig {
        &self.config
    }

    /// Sends one completion request. 5xx replies and timeouts are retried up to
    /// `max_retries` times with exponential backoff; 4xx replies fail at once.
    pub fn chat_complete(&self, req: &ChatRequest) -> Result<ChatResponse, PerceptionError> {
        let _slot = self.slots.acquire();
        let url = self.config.url();
        let body = req.to_wire().to_string();
        let headers = vec![("Authorization".to_string(), format!("Bearer {}", self.config.api_key))];
        let mut attempt = 0;
        loop {
            attempt += 1;
            let failure = match self.transport.post_json(&url, &headers, &body, self.config.timeout) {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    return ChatResponse::from_wire(&reply.body);
                }
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    return Err(PerceptionError::Credential(reply.status));
                }
                Ok(reply) if reply.status < 500 => {
                    return Err(PerceptionError::Config {
                        status: reply.status,
                        body: reply.body,
                    });
                }
                Ok(reply) => format!("HTTP {}", reply.status),
                Err(TransportFailure::Timeout) => "timeout".to_string(),
                Err(TransportFailure::Connection(m)) => m,
            };
            if attempt > self.config.max_retries {
                return Err(PerceptionError::Transport {
                    attempts: attempt,
                    message: failure,
                });
            }
            log::warn!("chat request failed ({failure}); retry {attempt}/{}", self.config.max_retries);
            std::thread::sleep(self.config.backoff_base * 2u32.pow(attempt - 1));
        }
    }
}
