//! Harness configuration, loaded from one JSON file. Secrets are referenced
//! by environment variable name and never stored.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{DecodingOptions, HttpChatClient, DEFAULT_RESPONSE_CAP, DEFAULT_TOOL_BUDGET};
use crate::retriever::{Embedder, HttpEmbedder, TestEmbedder};
use crate::reward::{DEFAULT_DELTA, DEFAULT_GROUP_SIZE};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("environment variable {0} is not set")]
    MissingSecret(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbedderConfig {
    #[default]
    Test,
    Http {
        endpoint: String,
        model: String,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_retries")]
        max_retries: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
}

fn default_retries() -> u32 {
    3
}

fn secret(var: &Option<String>) -> Result<Option<String>, ConfigError> {
    match var {
        None => Ok(None),
        Some(name) => std::env::var(name)
            .map(Some)
            .map_err(|_| ConfigError::MissingSecret(name.clone())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    /// Label every node carries in queries, e.g. `biomedical`.
    pub domain_label: Option<String>,
    pub embedder: EmbedderConfig,
    pub chat: Option<ChatConfig>,
    pub tool_budget: usize,
    pub response_cap: usize,
    pub delta: f64,
    pub group_size: usize,
    pub concurrency: usize,
    pub seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            nodes: None,
            edges: None,
            domain_label: None,
            embedder: EmbedderConfig::Test,
            chat: None,
            tool_budget: DEFAULT_TOOL_BUDGET,
            response_cap: DEFAULT_RESPONSE_CAP,
            delta: DEFAULT_DELTA,
            group_size: DEFAULT_GROUP_SIZE,
            concurrency: 1,
            seed: 0,
        }
    }
}

impl HarnessConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let read_err = |message: String| ConfigError::Read {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let cfg: HarnessConfig = serde_json::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad("delta must be in (0, 1]");
        }
        if self.tool_budget == 0 {
            return bad("tool_budget must be at least 1");
        }
        if self.group_size < 2 {
            return bad("group_size must be at least 2");
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1");
        }
        if self.response_cap == 0 {
            return bad("response_cap must be at least 1");
        }
        Ok(())
    }

    /// Short identifier of the embedder, used in index fingerprints.
    pub fn embedder_id(&self) -> String {
        match &self.embedder {
            EmbedderConfig::Test => "test".into(),
            EmbedderConfig::Http { endpoint, model, .. } => format!("http:{endpoint}:{model}"),
        }
    }

    pub fn build_embedder(&self) -> Result<Box<dyn Embedder>, ConfigError> {
        Ok(match &self.embedder {
            EmbedderConfig::Test => Box::new(TestEmbedder),
            EmbedderConfig::Http {
                endpoint,
                model,
                api_key_env,
                max_retries,
            } => {
                let mut e = HttpEmbedder::new(endpoint.clone(), model.clone());
                e.api_key = secret(api_key_env)?;
                e.max_retries = *max_retries;
                Box::new(e)
            }
        })
    }

    pub fn build_chat_client(&self) -> Result<Option<HttpChatClient>, ConfigError> {
        let Some(chat) = &self.chat else { return Ok(None) };
        let mut c = HttpChatClient::new(chat.endpoint.clone(), chat.model.clone());
        c.api_key = secret(&chat.api_key_env)?;
        c.max_retries = chat.max_retries;
        Ok(Some(c))
    }

    pub fn decoding_options(&self) -> DecodingOptions {
        let mut o = DecodingOptions::default();
        if let Some(chat) = &self.chat {
            if let Some(t) = chat.temperature {
                o.temperature = t;
            }
            if let Some(m) = chat.max_tokens {
                o.max_tokens = m;
            }
        }
        o
    }
}
