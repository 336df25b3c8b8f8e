//! Visual imagination: turn a text-only intent into reference images before
//! refinement starts.

use std::path::PathBuf;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{json, Value};

use crate::backend::{agent, BackendError};
use crate::model::Intent;
use crate::raster::Raster;

pub const ENV_IMG_URL: &str = "VREFINE_IMG_URL";
pub const ENV_IMG_MODEL: &str = "VREFINE_IMG_MODEL";
pub const ENV_IMG_KEY: &str = "VREFINE_IMG_KEY";

pub trait Imaginer: Send + Sync {
    fn generate(&self, prompt: &str, count: usize) -> Result<Vec<Raster>, BackendError>;
}

/// Returns the same image file for every prompt.
#[derive(Debug, Clone)]
pub struct MockFileImaginer {
    path: PathBuf,
}

impl MockFileImaginer {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }
}

impl Imaginer for MockFileImaginer {
    fn generate(&self, _prompt: &str, count: usize) -> Result<Vec<Raster>, BackendError> {
        let img = Raster::read_png(&self.path)
            .map_err(|e| BackendError::Io(format!("{}: {e}", self.path.display())))?;
        Ok(vec![img; count.max(1)])
    }
}

/// Text-to-image endpoint speaking the common images-generation shape:
/// `{"model","prompt","n","response_format":"b64_json"}` answered by
/// `{"data":[{"b64_json": "..."}]}`.
#[derive(Clone)]
pub struct HttpImageGen {
    url: String,
    model: String,
    key: Option<String>,
    agent: ureq::Agent,
}

impl HttpImageGen {
    pub fn new(url: impl Into<String>, model: impl Into<String>, key: Option<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            key,
            agent: agent(Duration::from_secs(300)),
        }
    }

    pub fn from_env() -> Result<Self, BackendError> {
        let url = std::env::var(ENV_IMG_URL)
            .map_err(|_| BackendError::Config(format!("{ENV_IMG_URL} is not set")))?;
        let model = std::env::var(ENV_IMG_MODEL).unwrap_or_default();
        let key = std::env::var(ENV_IMG_KEY).ok().filter(|k| !k.is_empty());
        Ok(Self::new(url, model, key))
    }
}

impl Imaginer for HttpImageGen {
    fn generate(&self, prompt: &str, count: usize) -> Result<Vec<Raster>, BackendError> {
        let body = json!({
            "model": self.model,
            "prompt": prompt,
            "n": count.max(1),
            "response_format": "b64_json",
        });
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
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_to_string()
            .map_err(|e| BackendError::Network(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(BackendError::Auth(format!("HTTP {status}"))),
            _ => return Err(BackendError::Network(format!("HTTP {status}: {text}"))),
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| BackendError::Parse(e.to_string()))?;
        let items = v["data"]
            .as_array()
            .ok_or_else(|| BackendError::Parse("reply has no data array".into()))?;
        let images = items
            .iter()
            .map(|item| {
                let b64 = item["b64_json"]
                    .as_str()
                    .ok_or_else(|| BackendError::Parse("data item without b64_json".into()))?;
                let bytes = STANDARD
                    .decode(b64)
                    .map_err(|e| BackendError::Parse(e.to_string()))?;
                Raster::from_png(&bytes).map_err(|e| BackendError::Parse(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if images.is_empty() {
            return Err(BackendError::Parse("no images returned".into()));
        }
        Ok(images)
    }
}

/// Adds imagined reference images to a text-only intent.
///
/// The intent is returned unchanged when imagination is disabled, when the
/// user already supplied reference images, or when it already carries
/// imagined images (so the operation is idempotent). The prompt is the
/// expanded description when present.
pub fn imagine(
    imaginer: &dyn Imaginer,
    intent: &Intent,
    enabled: bool,
    count: usize,
) -> Result<Intent, BackendError> {
    if !enabled || !intent.reference_images().is_empty() || !intent.imagined_images().is_empty() {
        return Ok(intent.clone());
    }
    let images = imaginer.generate(intent.best_text(), count.max(1))?;
    if images.is_empty() {
        return Err(BackendError::Parse("imaginer returned no images".into()));
    }
    intent
        .clone()
        .with_imagined(images)
        .map_err(|e| BackendError::Precondition(e.to_string()))
}
