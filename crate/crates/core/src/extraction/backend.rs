use std::env;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use super::mock::mock_extract;
use crate::chunker::Chunk;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Response(String),
    #[error("environment variable {0} is not set")]
    MissingCredential(String),
}

/// A text-completion service. Implementations are called from several worker
/// threads at once.
pub trait ExtractionBackend: Send + Sync {
    fn complete(&self, prompt: &str, model: &str, params: &Map<String, Value>) -> Result<String, BackendError>;
}

/// Rule-based stand-in that answers every prompt with the deterministic
/// extraction of the chunk embedded in it.
#[derive(Debug, Default, Clone, Copy)]
pub struct MockBackend;

const MBR_MARKER: &str = "- Manufacturing Batch Record: ";
const TEMPLATE_MARKER: &str = "\n- Template Structure: ";

impl ExtractionBackend for MockBackend {
    fn complete(&self, prompt: &str, _model: &str, _params: &Map<String, Value>) -> Result<String, BackendError> {
        let start = prompt
            .find(MBR_MARKER)
            .ok_or_else(|| BackendError::Response("prompt carries no batch record".into()))?
            + MBR_MARKER.len();
        let end = prompt
            .rfind(TEMPLATE_MARKER)
            .filter(|&e| e >= start)
            .ok_or_else(|| BackendError::Response("prompt carries no template".into()))?;
        let chunk = Chunk {
            index: 0,
            token_count: 0,
            text: prompt[start..end].to_string(),
        };
        let record = mock_extract(&chunk);
        Ok(format!("<json>\n{}\n</json>", record.to_json_pretty()))
    }
}

/// Settings for a chat-completion style HTTP service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: Option<String>,
    pub timeout_secs: f64,
    pub transport_retries: u32,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            auth_env: None,
            timeout_secs: 120.0,
            transport_retries: 2,
        }
    }
}

#[derive(Debug)]
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    settings: HttpSettings,
    token: Option<String>,
}

impl HttpBackend {
    pub fn new(settings: HttpSettings) -> Result<Self, BackendError> {
        let token = match &settings.auth_env {
            Some(var) => Some(env::var(var).map_err(|_| BackendError::MissingCredential(var.clone()))?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(settings.timeout_secs.max(0.001)))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self { client, settings, token })
    }

    fn send_once(&self, body: &Value) -> Result<String, BackendError> {
        let mut req = self.client.post(&self.settings.endpoint).json(body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| BackendError::Response(e.to_string()))?;
        completion_text(&value).ok_or_else(|| BackendError::Response("no completion text in response".into()))
    }
}

fn completion_text(v: &Value) -> Option<String> {
    let choice = v.get("choices")?.get(0)?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl ExtractionBackend for HttpBackend {
    fn complete(&self, prompt: &str, model: &str, params: &Map<String, Value>) -> Result<String, BackendError> {
        let mut body = json!({
            "model": model,
            "messages": [{"role": "user", "content": prompt}],
        });
        let obj = body.as_object_mut().expect("object literal");
        for (k, v) in params {
            obj.entry(k.clone()).or_insert_with(|| v.clone());
        }

        let mut attempt = 0;
        loop {
            match self.send_once(&body) {
                Err(BackendError::Transport(msg)) if attempt < self.settings.transport_retries => {
                    tracing::warn!(attempt, "transport error, retrying: {msg}");
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}
