//! Endpoint configuration.
//!
//! ```toml
//! base_url = "http://localhost:8000"
//! chat_path = "/v1/chat/completions"   # default
//! api_key_env = "LINEAGE_API_KEY"      # optional; the key itself never lives here
//! model = "my-model"
//! temperature = 0.0
//! max_tokens = 4096
//! timeout_secs = 120
//! workers = 4
//! requests_per_second = 2.0            # optional
//!
//! [retry]
//! max_attempts = 3
//! backoff_ms = 500
//! backoff_factor = 2.0
//! ```

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::ClientError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_backoff_factor")]
    pub backoff_factor: f64,
}

fn default_backoff_ms() -> u64 {
    500
}

fn default_backoff_factor() -> f64 {
    2.0
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_ms: default_backoff_ms(),
            backoff_factor: default_backoff_factor(),
        }
    }
}

impl RetryPolicy {
    /// Pause before attempt `attempt` (1-based; the first attempt has none).
    pub fn delay_before(&self, attempt: u32) -> Duration {
        if attempt <= 1 {
            return Duration::ZERO;
        }
        let ms = self.backoff_ms as f64 * self.backoff_factor.powi(attempt as i32 - 2);
        Duration::from_millis(ms.min(60_000.0) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    #[serde(default = "default_chat_path")]
    pub chat_path: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_second: Option<f64>,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_chat_path() -> String {
    "/v1/chat/completions".into()
}

fn default_max_tokens() -> u32 {
    4096
}

fn default_timeout_secs() -> f64 {
    120.0
}

fn default_workers() -> usize {
    4
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            chat_path: default_chat_path(),
            api_key_env: None,
            model: model.into(),
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            timeout_secs: default_timeout_secs(),
            workers: default_workers(),
            requests_per_second: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ClientError> {
        let config: Self = toml::from_str(text).map_err(|e| ClientError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClientError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        let bad = |m: String| Err(ClientError::Config(m));
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return bad(format!("timeout_secs must be positive, got {}", self.timeout_secs));
        }
        if self.retry.max_attempts < 1 {
            return bad("retry.max_attempts must be at least 1".into());
        }
        if self.retry.backoff_factor.is_nan() || self.retry.backoff_factor < 1.0 {
            return bad("retry.backoff_factor must be at least 1".into());
        }
        if self.workers < 1 {
            return bad("workers must be at least 1".into());
        }
        if let Some(rps) = self.requests_per_second {
            if !(rps > 0.0 && rps.is_finite()) {
                return bad(format!("requests_per_second must be positive, got {rps}"));
            }
        }
        self.chat_url()?;
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn chat_url(&self) -> Result<Url, ClientError> {
        let base = Url::parse(&self.base_url).map_err(|e| ClientError::Config(format!("base_url: {e}")))?;
        if !matches!(base.scheme(), "http" | "https") || base.host().is_none() {
            return Err(ClientError::Config(format!(
                "base_url must be an http(s) URL: {}",
                self.base_url
            )));
        }
        let mut joined = base.as_str().trim_end_matches('/').to_owned();
        if !self.chat_path.starts_with('/') {
            joined.push('/');
        }
        joined.push_str(&self.chat_path);
        Url::parse(&joined).map_err(|e| ClientError::Config(format!("chat_path: {e}")))
    }

    /// Bearer token from the configured environment variable.
    pub fn api_key(&self) -> Result<Option<String>, ClientError> {
        match &self.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| ClientError::Config(format!("environment variable {var} is not set"))),
        }
    }
}
