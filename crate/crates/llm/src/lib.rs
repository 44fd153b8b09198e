//! Explainer, verifier and reconstructor orchestration with pluggable,
//! cacheable language-model providers.

pub mod cache;
pub mod config;
pub mod http;
pub mod pipeline;
pub mod prompts;
pub mod provider;

pub use cache::{CacheDir, CacheEntry, CachedProvider, ReplayCache};
pub use config::{MockKind, ProviderConfig, ProviderKind};
pub use http::{HttpConfig, HttpProvider};
pub use pipeline::{
    aggregate, explain, kshot_baseline, kshot_report, kshot_samples, lint_program, lint_score, lint_score_with, parse_verdict,
    reconstruct, verify, Aggregation, KShotReport, LintBatch, LintOptions, LintRun, LintSummary, Metric, PipelineError,
    RunStatus, Sample, Scores, TrialFailure, TrialRecord, Transcript, Verdict,
};
pub use prompts::{map_description, PromptBundle, Track};
pub use provider::{cache_key, EchoMock, EmptyMock, LineDropMock, LlmProvider, LlmRequest, ProviderError, Role, ScriptedMock};
