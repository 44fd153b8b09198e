use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cache::{CachedProvider, ReplayCache};
use crate::http::{HttpConfig, HttpProvider};
use crate::provider::{EchoMock, EmptyMock, LineDropMock, LlmProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    Http,
    #[default]
    Mock,
    Replay,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "http" => Ok(ProviderKind::Http),
            "mock" => Ok(ProviderKind::Mock),
            "replay" | "replay-cache" => Ok(ProviderKind::Replay),
            other => Err(format!("unknown provider {other:?} (expected http, mock or replay)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockKind {
    #[default]
    Echo,
    Empty,
    LineDrop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub mock: MockKind,
    /// Line-drop probability for `MockKind::LineDrop`.
    pub q: f64,
    pub seed: u64,
    /// Responses are recorded here for http and mock, and read from here for replay.
    pub cache_dir: Option<PathBuf>,
    /// Model name the replay cache was recorded under; defaults to the name the
    /// http or mock settings would use.
    pub replay_model: Option<String>,
    pub http: HttpConfig,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            mock: MockKind::Echo,
            q: 0.0,
            seed: 0,
            cache_dir: None,
            replay_model: None,
            http: HttpConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("replay provider needs cache_dir")]
    MissingCacheDir,
    #[error("line-drop q must lie in [0, 1], got {0}")]
    BadQ(f64),
}

impl ProviderConfig {
    pub fn mock(kind: MockKind) -> Self {
        ProviderConfig {
            mock: kind,
            ..Self::default()
        }
    }

    fn mock_provider(&self) -> Box<dyn LlmProvider> {
        match self.mock {
            MockKind::Echo => Box::new(EchoMock),
            MockKind::Empty => Box::new(EmptyMock),
            MockKind::LineDrop => Box::new(LineDropMock::new(self.q, self.seed)),
        }
    }

    /// Model name responses are keyed under.
    pub fn model_name(&self) -> String {
        match self.kind {
            ProviderKind::Http => self.http.model.clone(),
            ProviderKind::Mock => self.mock_provider().model().to_string(),
            ProviderKind::Replay => self.replay_model.clone().unwrap_or_else(|| self.mock_provider().model().to_string()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn LlmProvider>, ConfigError> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(ConfigError::BadQ(self.q));
        }
        let base: Box<dyn LlmProvider> = match self.kind {
            ProviderKind::Replay => {
                let dir = self.cache_dir.clone().ok_or(ConfigError::MissingCacheDir)?;
                return Ok(Box::new(ReplayCache::new(dir, self.model_name())));
            }
            ProviderKind::Http => Box::new(HttpProvider::new(self.http.clone())),
            ProviderKind::Mock => self.mock_provider(),
        };
        Ok(match &self.cache_dir {
            Some(dir) => Box::new(CachedProvider::new(base, dir.clone())),
            None => base,
        })
    }
}
