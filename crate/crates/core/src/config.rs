use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::chunker::{ChunkConfigError, ChunkingConfig, DEFAULT_HARD_SPLIT_THRESHOLD, DEFAULT_MAX_TOKENS};
use crate::extraction::{ExtractionConfig, HttpSettings, DEFAULT_MAX_ATTEMPTS, DEFAULT_WORKERS_CAP};
use crate::metrics::{WeightError, WeightVector};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Chunking(#[from] ChunkConfigError),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Http,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub auth_env: Option<String>,
    pub timeout_secs: f64,
    pub transport_retries: u32,
}

impl Default for BackendConfig {
    fn default() -> Self {
        let http = HttpSettings::default();
        Self {
            kind: BackendKind::default(),
            endpoint: http.endpoint,
            model: "gpt-4o".into(),
            auth_env: Some("BATCHREC_API_KEY".into()),
            timeout_secs: http.timeout_secs,
            transport_retries: http.transport_retries,
        }
    }
}

impl BackendConfig {
    pub fn http_settings(&self) -> HttpSettings {
        HttpSettings {
            endpoint: self.endpoint.clone(),
            auth_env: self.auth_env.clone(),
            timeout_secs: self.timeout_secs,
            transport_retries: self.transport_retries,
        }
    }
}

/// Everything a run needs. Loaded from a JSON file; command-line flags
/// override individual keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub max_tokens: usize,
    pub hard_split_threshold: usize,
    pub workers_cap: usize,
    pub max_attempts: u32,
    pub backend: BackendConfig,
    /// Generation parameters forwarded to the backend as-is.
    pub params: Map<String, Value>,
    pub weights: WeightVector,
    pub reprocess_threshold: Option<f64>,
    pub out: Option<PathBuf>,
    pub metrics_out: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_TOKENS,
            hard_split_threshold: DEFAULT_HARD_SPLIT_THRESHOLD,
            workers_cap: DEFAULT_WORKERS_CAP,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            backend: BackendConfig::default(),
            params: Map::new(),
            weights: WeightVector::default(),
            reprocess_threshold: None,
            out: None,
            metrics_out: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.chunking()?;
        self.weights.validate()?;
        if self.max_attempts == 0 {
            return Err(ConfigError::Invalid("max_attempts must be at least 1".into()));
        }
        if self.workers_cap == 0 {
            return Err(ConfigError::Invalid("workers_cap must be at least 1".into()));
        }
        if let Some(t) = self.reprocess_threshold {
            if !(0.0..=100.0).contains(&t) {
                return Err(ConfigError::Invalid(format!("reprocess_threshold {t} is outside 0..=100")));
            }
        }
        if self.backend.timeout_secs.is_nan() || self.backend.timeout_secs <= 0.0 {
            return Err(ConfigError::Invalid("backend.timeout_secs must be positive".into()));
        }
        Ok(())
    }

    pub fn chunking(&self) -> Result<ChunkingConfig, ChunkConfigError> {
        ChunkingConfig::new(self.max_tokens, self.hard_split_threshold)
    }

    pub fn extraction(&self) -> ExtractionConfig {
        ExtractionConfig {
            model: self.backend.model.clone(),
            max_attempts: self.max_attempts,
            workers_cap: self.workers_cap,
            params: self.params.clone(),
            reprocess_threshold: self.reprocess_threshold,
        }
    }
}
