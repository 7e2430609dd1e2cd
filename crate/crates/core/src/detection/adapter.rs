//! Vision-model adapters and ingredient detection.

use super::image::CameraImage;
use super::labels::{normalize_label, parse_response};
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

pub const PROMPT: &str = "List the food ingredients visible on the table, comma separated.";
pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(20);
pub const ENV_URL: &str = "SPICE_VLM_URL";
pub const ENV_KEY: &str = "SPICE_VLM_KEY";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdapterError {
    #[error("vision model did not answer within the deadline")]
    Timeout,
    #[error("vision model refused or answered unparseably: {0}")]
    Refusal(String),
    #[error("vision model unavailable: {0}")]
    Unavailable(String),
}

/// Image in, free text out.
pub trait VisionAdapter: Send {
    fn model_id(&self) -> &str;
    /// `image_ref` names the frame (the fixture file name for recorded images).
    fn describe(&mut self, image: &CameraImage, image_ref: &str, deadline: Duration) -> Result<String, AdapterError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MockReply {
    Text(String),
    Fault { error: MockFault },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MockFault {
    Timeout,
    Refusal,
}

/// Scripted answers keyed by image file name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MockAdapter {
    replies: BTreeMap<String, MockReply>,
}

#[derive(Debug, thiserror::Error)]
pub enum MockScriptError {
    #[error("reading mock script: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing mock script: {0}")]
    Json(#[from] serde_json::Error),
}

impl MockAdapter {
    pub const MODEL_ID: &'static str = "mock";

    pub fn new(replies: BTreeMap<String, MockReply>) -> Self {
        Self { replies }
    }

    pub fn from_json(text: &str) -> Result<Self, MockScriptError> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    pub fn load(path: &Path) -> Result<Self, MockScriptError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn with_reply(mut self, image_ref: &str, text: &str) -> Self {
        self.replies.insert(image_ref.to_string(), MockReply::Text(text.to_string()));
        self
    }
}

impl VisionAdapter for MockAdapter {
    fn model_id(&self) -> &str {
        Self::MODEL_ID
    }

    fn describe(&mut self, _image: &CameraImage, image_ref: &str, _deadline: Duration) -> Result<String, AdapterError> {
        let key = Path::new(image_ref)
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or(image_ref);
        match self.replies.get(key).or_else(|| self.replies.get(image_ref)) {
            Some(MockReply::Text(t)) => Ok(t.clone()),
            Some(MockReply::Fault { error: MockFault::Timeout }) => Err(AdapterError::Timeout),
            Some(MockReply::Fault { error: MockFault::Refusal }) => Err(AdapterError::Refusal(String::new())),
            None => Err(AdapterError::Unavailable(format!("no scripted reply for {key}"))),
        }
    }
}

/// HTTP adapter: posts the PPM-encoded frame (base64) with [`PROMPT`] as JSON
/// and reads either a JSON `{"text": ...}` body or plain text back.
#[derive(Debug, Clone)]
pub struct LiveAdapter {
    url: String,
    key: Option<String>,
    model_id: String,
}

impl LiveAdapter {
    pub fn new(url: &str, key: Option<String>) -> Self {
        Self {
            url: url.to_string(),
            key,
            model_id: format!("http:{url}"),
        }
    }

    /// Reads [`ENV_URL`] and [`ENV_KEY`].
    pub fn from_env() -> Result<Self, AdapterError> {
        let url = std::env::var(ENV_URL).map_err(|_| AdapterError::Unavailable(format!("{ENV_URL} is not set")))?;
        Ok(Self::new(&url, std::env::var(ENV_KEY).ok()))
    }

    pub fn request_body(image: &CameraImage) -> String {
        serde_json::json!({
            "prompt": PROMPT,
            "image": base64::engine::general_purpose::STANDARD.encode(image.to_ppm()),
            "image_format": "ppm",
        })
        .to_string()
    }
}

impl VisionAdapter for LiveAdapter {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn describe(&mut self, image: &CameraImage, _image_ref: &str, deadline: Duration) -> Result<String, AdapterError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(deadline))
            .http_status_as_error(true)
            .build()
            .into();
        let mut req = agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(Self::request_body(image)).map_err(|e| match e {
            ureq::Error::Timeout(_) => AdapterError::Timeout,
            other => AdapterError::Unavailable(other.to_string()),
        })?;
        let body = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => AdapterError::Timeout,
            other => AdapterError::Unavailable(other.to_string()),
        })?;
        match serde_json::from_str::<serde_json::Value>(&body) {
            Ok(serde_json::Value::Object(map)) => match map.get("text").and_then(|t| t.as_str()) {
                Some(t) => Ok(t.to_string()),
                None => Err(AdapterError::Refusal(body)),
            },
            _ => Ok(body),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedLabel {
    pub label: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    /// Canonical labels in answer order, without duplicates.
    pub labels: Vec<DetectedLabel>,
    pub raw_response: String,
    pub model_id: String,
}

impl DetectionResult {
    pub fn label_names(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.label.clone()).collect()
    }
}

/// Turns a raw answer into canonical labels. Duplicates keep their first
/// position and highest confidence; missing confidence means 1.0.
pub fn interpret_response(raw: &str, model_id: &str) -> Result<DetectionResult, AdapterError> {
    let items = parse_response(raw).map_err(|_| AdapterError::Refusal(raw.to_string()))?;
    let mut labels: Vec<DetectedLabel> = Vec::new();
    for item in items {
        let Some(label) = normalize_label(&item.text) else {
            continue;
        };
        let confidence = item
            .confidence
            .filter(|c| c.is_finite())
            .map(|c| c.clamp(0.0, 1.0))
            .unwrap_or(1.0);
        match labels.iter_mut().find(|l| l.label == label) {
            Some(existing) => existing.confidence = existing.confidence.max(confidence),
            None => labels.push(DetectedLabel { label, confidence }),
        }
    }
    Ok(DetectionResult {
        labels,
        raw_response: raw.to_string(),
        model_id: model_id.to_string(),
    })
}

pub fn detect_ingredients(
    image: &CameraImage,
    image_ref: &str,
    adapter: &mut dyn VisionAdapter,
    deadline: Duration,
) -> Result<DetectionResult, AdapterError> {
    let raw = adapter.describe(image, image_ref, deadline)?;
    interpret_response(&raw, adapter.model_id())
}
