//! HTTP client for chat-style vision-language model endpoints, shared by the
//! VLM edit generator and the VLM pairwise evaluator.
//!
//! Requests follow the widely used chat-completions shape: one user message
//! whose content interleaves text parts and base64 PNG `image_url` parts.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{json, Value};
use thiserror::Error;

use crate::raster::Raster;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("network: {0}")]
    Network(String),
    #[error("authentication: {0}")]
    Auth(String),
    #[error("unparseable backend response: {0}")]
    Parse(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub const ENV_VLM_URL: &str = "VREFINE_VLM_URL";
pub const ENV_VLM_MODEL: &str = "VREFINE_VLM_MODEL";
pub const ENV_VLM_KEY: &str = "VREFINE_VLM_KEY";

/// One piece of a multimodal prompt.
#[derive(Debug, Clone)]
pub enum Part {
    Text(String),
    Image(Raster),
}

#[derive(Clone)]
pub struct ChatClient {
    url: String,
    model: String,
    key: Option<String>,
    temperature: f64,
    agent: ureq::Agent,
}

impl std::fmt::Debug for ChatClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChatClient")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("temperature", &self.temperature)
            .finish_non_exhaustive()
    }
}

impl ChatClient {
    pub fn new(url: impl Into<String>, model: impl Into<String>, key: Option<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            key,
            temperature: 0.7,
            agent: agent(Duration::from_secs(300)),
        }
    }

    /// Reads `VREFINE_VLM_URL`, `VREFINE_VLM_MODEL`, `VREFINE_VLM_KEY`.
    pub fn from_env() -> Result<Self, BackendError> {
        let url = std::env::var(ENV_VLM_URL)
            .map_err(|_| BackendError::Config(format!("{ENV_VLM_URL} is not set")))?;
        let model = std::env::var(ENV_VLM_MODEL)
            .map_err(|_| BackendError::Config(format!("{ENV_VLM_MODEL} is not set")))?;
        let key = std::env::var(ENV_VLM_KEY).ok().filter(|k| !k.is_empty());
        Ok(Self::new(url, model, key))
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn request_body(&self, parts: &[Part]) -> Result<Value, BackendError> {
        let content = parts
            .iter()
            .map(|p| match p {
                Part::Text(t) => Ok(json!({"type": "text", "text": t})),
                Part::Image(img) => {
                    let png = img.to_png().map_err(|e| BackendError::Io(e.to_string()))?;
                    Ok(json!({
                        "type": "image_url",
                        "image_url": {"url": format!("data:image/png;base64,{}", STANDARD.encode(png))}
                    }))
                }
            })
            .collect::<Result<Vec<_>, BackendError>>()?;
        Ok(json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": content}],
        }))
    }

    /// Sends one prompt and returns the assistant's text reply.
    pub fn complete(&self, parts: &[Part]) -> Result<String, BackendError> {
        let body = self.request_body(parts)?;
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .header("Content-Type", "application/json")
            .send(body.to_string())
            .map_err(|e| BackendError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Network(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(BackendError::Auth(format!("HTTP {status}: {text}"))),
            _ => return Err(BackendError::Network(format!("HTTP {status}: {text}"))),
        }
        parse_chat_reply(&text)
    }
}

pub(crate) fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

/// Extracts `choices[0].message.content`, accepting either a string or a list
/// of text parts.
pub fn parse_chat_reply(body: &str) -> Result<String, BackendError> {
    let v: Value = serde_json::from_str(body).map_err(|e| BackendError::Parse(e.to_string()))?;
    let content = &v["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join("")),
        _ => Err(BackendError::Parse(format!(
            "no choices[0].message.content in reply: {}",
            truncate(body, 200)
        ))),
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
