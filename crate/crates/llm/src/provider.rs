use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Explainer,
    Verifier,
    Reconstructor,
    KShot,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Explainer => "explainer",
            Role::Verifier => "verifier",
            Role::Reconstructor => "reconstructor",
            Role::KShot => "kshot",
        }
    }
}

/// One completion request. `payload` is the raw object behind the prompt
/// (program source for the explainer and verifier, explanation for the
/// reconstructor); only mocks read it, and it is not part of the cache key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmRequest {
    pub role: Role,
    pub prompt: String,
    pub trial: u32,
    pub payload: String,
}

impl LlmRequest {
    pub fn new(role: Role, prompt: impl Into<String>, trial: u32, payload: impl Into<String>) -> Self {
        LlmRequest {
            role,
            prompt: prompt.into(),
            trial,
            payload: payload.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_key: Option<String>,
    /// Seconds since the epoch at which the response was first recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recorded_at: Option<u64>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Completion {
            text: text.into(),
            cache_key: None,
            recorded_at: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("no cached response for key {0}")]
    CacheMiss(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error("http: {0}")]
    Http(String),
    #[error("missing API key: set {0}")]
    MissingApiKey(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("{0}")]
    Scripted(String),
}

pub trait LlmProvider: Send + Sync {
    /// Label recorded in run provenance.
    fn name(&self) -> String;

    fn model(&self) -> &str;

    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError>;

    /// Local providers are cheap and deterministic, so trials may run in parallel.
    fn is_local(&self) -> bool {
        true
    }
}

impl<P: LlmProvider + ?Sized> LlmProvider for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn model(&self) -> &str {
        (**self).model()
    }
    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        (**self).complete(req)
    }
    fn is_local(&self) -> bool {
        (**self).is_local()
    }
}

/// Content address of a request: sha256 over model, trial index and prompt.
pub fn cache_key(model: &str, prompt: &str, trial: u32) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0u8]);
    h.update(trial.to_le_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

const CLEAN_VERDICT: &str = "No. The explanation describes the strategy in plain terms.";

/// Perfect oracle: the explanation is the program text and the reconstruction
/// is the explanation.
#[derive(Debug, Clone, Default)]
pub struct EchoMock;

impl LlmProvider for EchoMock {
    fn name(&self) -> String {
        "mock:echo".into()
    }
    fn model(&self) -> &str {
        "echo"
    }
    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        Ok(Completion::text(match req.role {
            Role::Explainer => format!("<explanation>\n{}\n</explanation>", req.payload),
            Role::Verifier => CLEAN_VERDICT.to_string(),
            Role::Reconstructor => format!("<strategy>\n{}\n</strategy>", req.payload),
            Role::KShot => "<strategy></strategy>".to_string(),
        }))
    }
}

/// Always reconstructs the empty program.
#[derive(Debug, Clone, Default)]
pub struct EmptyMock;

impl LlmProvider for EmptyMock {
    fn name(&self) -> String {
        "mock:empty".into()
    }
    fn model(&self) -> &str {
        "empty"
    }
    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        Ok(Completion::text(match req.role {
            Role::Explainer => "<explanation>Do nothing at all.</explanation>".to_string(),
            Role::Verifier => CLEAN_VERDICT.to_string(),
            Role::Reconstructor | Role::KShot => "<strategy></strategy>".to_string(),
        }))
    }
}

fn is_command_line(line: &str) -> bool {
    let t = line.trim();
    t.starts_with("u.") && !t.contains('{') && !t.contains('}')
}

/// Echo with noise: each command line of the explanation is dropped with
/// probability `q`. The per-line uniforms depend only on (seed, explanation,
/// trial), so a line dropped at some q is also dropped at every larger q.
#[derive(Debug, Clone)]
pub struct LineDropMock {
    pub q: f64,
    pub seed: u64,
}

impl LineDropMock {
    pub fn new(q: f64, seed: u64) -> Self {
        LineDropMock { q, seed }
    }

    pub fn drop_lines(&self, text: &str, trial: u32) -> String {
        let digest = Sha256::digest(text.as_bytes());
        let mut seed = self.seed ^ u64::from(trial).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        seed ^= u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for line in text.lines() {
            // draw for every line so later lines do not shift with q
            let u: f64 = rng.gen();
            if is_command_line(line) && u < self.q {
                continue;
            }
            out.push(line);
        }
        out.join("\n")
    }
}

impl LlmProvider for LineDropMock {
    fn name(&self) -> String {
        format!("mock:line-drop(q={})", self.q)
    }
    fn model(&self) -> &str {
        "line-drop"
    }
    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        match req.role {
            Role::Reconstructor => Ok(Completion::text(format!(
                "<strategy>\n{}\n</strategy>",
                self.drop_lines(&req.payload, req.trial)
            ))),
            _ => EchoMock.complete(req),
        }
    }
}

/// Canned responses keyed by (role, trial), with per-role fallbacks. A scripted
/// error string makes the call fail with `ProviderError::Scripted`.
#[derive(Debug, Clone, Default)]
pub struct ScriptedMock {
    by_trial: BTreeMap<(Role, u32), Result<String, String>>,
    fallback: BTreeMap<Role, Result<String, String>>,
}

impl ScriptedMock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn on(mut self, role: Role, trial: u32, text: impl Into<String>) -> Self {
        self.by_trial.insert((role, trial), Ok(text.into()));
        self
    }

    pub fn fail_on(mut self, role: Role, trial: u32, message: impl Into<String>) -> Self {
        self.by_trial.insert((role, trial), Err(message.into()));
        self
    }

    pub fn otherwise(mut self, role: Role, text: impl Into<String>) -> Self {
        self.fallback.insert(role, Ok(text.into()));
        self
    }
}

impl LlmProvider for ScriptedMock {
    fn name(&self) -> String {
        "mock:scripted".into()
    }
    fn model(&self) -> &str {
        "scripted"
    }
    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        let hit = self
            .by_trial
            .get(&(req.role, req.trial))
            .or_else(|| self.fallback.get(&req.role));
        match hit {
            Some(Ok(t)) => Ok(Completion::text(t.clone())),
            Some(Err(e)) => Err(ProviderError::Scripted(e.clone())),
            None => EchoMock.complete(req),
        }
    }
}
