use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::provider::{Completion, LlmProvider, LlmRequest, ProviderError};

pub const DEFAULT_API_KEY_ENV: &str = "LINT_API_KEY";

/// OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Base URL; `/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4".into(),
            temperature: 1.0,
            timeout_secs: 120,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
        }
    }
}

pub struct HttpProvider {
    cfg: HttpConfig,
    key: Option<String>,
    agent: ureq::Agent,
}

impl HttpProvider {
    /// Reads the API key from the configured variable. A missing key is only
    /// an error once a request is made, so keyless local servers still work
    /// when the variable is set to an empty string.
    pub fn new(cfg: HttpConfig) -> Self {
        let key = std::env::var(&cfg.api_key_env).ok();
        Self::with_key(cfg, key)
    }

    pub fn with_key(cfg: HttpConfig, key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        HttpProvider { cfg, key, agent }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.cfg
    }
}

impl LlmProvider for HttpProvider {
    fn name(&self) -> String {
        format!("http:{}", self.cfg.endpoint)
    }

    fn model(&self) -> &str {
        &self.cfg.model
    }

    fn is_local(&self) -> bool {
        false
    }

    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        let key = self
            .key
            .as_ref()
            .ok_or_else(|| ProviderError::MissingApiKey(self.cfg.api_key_env.clone()))?;
        let url = format!("{}/chat/completions", self.cfg.endpoint.trim_end_matches('/'));
        let body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "user", "content": req.prompt}],
        });
        let mut call = self.agent.post(&url).header("Content-Type", "application/json");
        if !key.is_empty() {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call.send_json(&body).map_err(|e| ProviderError::Http(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Http(e.to_string()))?;
        if !status.is_success() {
            let snippet: String = text.chars().take(300).collect();
            return Err(ProviderError::Http(format!("status {status}: {snippet}")));
        }
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        let content = v
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .ok_or_else(|| ProviderError::Malformed("no choices[0].message.content".into()))?;
        Ok(Completion::text(content))
    }
}
