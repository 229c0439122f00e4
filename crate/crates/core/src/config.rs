//! Engine configuration, loaded from TOML and overridden by flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ccg::{Language, DEFAULT_HOPS, DEFAULT_WINDOW};
use crate::hf_op::PipelineConfig;
use crate::prompt::DEFAULT_BUDGET;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "SARACODER_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Local,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub provider: ProviderKind,
    pub endpoint: Option<String>,
    pub cache_capacity: usize,
    pub spill_dir: Option<PathBuf>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { provider: ProviderKind::Local, endpoint: None, cache_capacity: crate::embedding::DEFAULT_CACHE_CAPACITY, spill_dir: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub index: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub language: Language,
    pub hops: usize,
    pub window: usize,
    pub budget: usize,
    /// `max_tokens` sent to the completer.
    pub max_tokens: usize,
    /// Import-derived prompt section on or off.
    pub eaid: bool,
    /// Evaluation worker threads; 0 uses every core.
    pub workers: usize,
    pub pipeline: PipelineConfig,
    pub embedding: EmbeddingConfig,
    pub paths: PathsConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            language: Language::Python,
            hops: DEFAULT_HOPS,
            window: DEFAULT_WINDOW,
            budget: DEFAULT_BUDGET,
            max_tokens: 64,
            eaid: true,
            workers: 0,
            pipeline: PipelineConfig::default(),
            embedding: EmbeddingConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Invalid(#[from] crate::hf_op::ConfigError),
    #[error("{0}")]
    Other(String),
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
        let config = Self::from_toml(&text)
            .map_err(|e| LoadError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), LoadError> {
        self.pipeline.validate()?;
        if self.hops == 0 || self.window == 0 {
            return Err(LoadError::Other("hops and window must be positive".into()));
        }
        if self.embedding.provider == ProviderKind::Remote && self.embedding.endpoint.is_none() {
            return Err(LoadError::Other("remote embedding provider needs an endpoint".into()));
        }
        Ok(())
    }
}
