use std::collections::HashMap;

use lint_core::fixtures::NamedProgram;
use lint_core::metrics::{ActionGranularity, BehaviorReport, MetricEngine, OpponentSet};
use lint_core::microlang::{parse, print, Program};
use lint_core::sim::SimError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::prompts::{extract_tag, strip_code_fence, PromptBundle};
use crate::provider::{Completion, LlmProvider, LlmRequest, ProviderError, Role};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_MAX_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Action,
    Outcome,
    Feature,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Action, Metric::Outcome, Metric::Feature];

    /// Action and outcome measure similarity; feature measures distance.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Feature)
    }

    pub fn worst(self) -> f64 {
        if self.higher_is_better() {
            0.0
        } else {
            1.0
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Action => "action",
            Metric::Outcome => "outcome",
            Metric::Feature => "feature",
        }
    }
}

/// How the k trial values of one program collapse to a single value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Worst trial per metric: min for action/outcome, max for feature.
    #[default]
    Conservative,
    /// Min for every metric.
    LiteralMin,
}

/// Aggregates trial values; `None` marks a failed trial and counts as the
/// metric's worst value. No trials at all also yields the worst value.
pub fn aggregate(metric: Metric, values: &[Option<f64>], rule: Aggregation) -> f64 {
    let vals = values.iter().map(|v| v.unwrap_or(metric.worst()));
    let use_max = rule == Aggregation::Conservative && !metric.higher_is_better();
    let folded = if use_max {
        vals.fold(f64::NEG_INFINITY, f64::max)
    } else {
        vals.fold(f64::INFINITY, f64::min)
    };
    if folded.is_finite() {
        folded
    } else {
        metric.worst()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub action: f64,
    pub outcome: f64,
    pub feature: f64,
}

impl Scores {
    pub fn worst() -> Self {
        Scores {
            action: Metric::Action.worst(),
            outcome: Metric::Outcome.worst(),
            feature: Metric::Feature.worst(),
        }
    }

    pub fn from_report(r: &BehaviorReport) -> Self {
        Scores {
            action: r.action,
            outcome: r.outcome,
            feature: r.feature,
        }
    }

    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Action => self.action,
            Metric::Outcome => self.outcome,
            Metric::Feature => self.feature,
        }
    }

    fn set(&mut self, m: Metric, v: f64) {
        match m {
            Metric::Action => self.action = v,
            Metric::Outcome => self.outcome = v,
            Metric::Feature => self.feature = v,
        }
    }

    /// Combines per-trial scores with `rule`; `None` entries are failed trials.
    pub fn aggregate(trials: &[Option<Scores>], rule: Aggregation) -> Self {
        let mut out = Scores::worst();
        for m in Metric::ALL {
            let vals: Vec<Option<f64>> = trials.iter().map(|t| t.map(|s| s.get(m))).collect();
            out.set(m, aggregate(m, &vals, rule));
        }
        out
    }

    /// Per-metric mean; `None` for an empty slice.
    pub fn mean(all: &[Scores]) -> Option<Self> {
        if all.is_empty() {
            return None;
        }
        let n = all.len() as f64;
        Some(Scores {
            action: all.iter().map(|s| s.action).sum::<f64>() / n,
            outcome: all.iter().map(|s| s.outcome).sum::<f64>() / n,
            feature: all.iter().map(|s| s.feature).sum::<f64>() / n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
    /// Neither yes nor no leads the answer; treated as a rejection.
    Unparseable,
}

/// Reads the leading yes/no of a verifier answer. "Yes" means jargon was found.
pub fn parse_verdict(response: &str) -> Verdict {
    let word: String = response
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Verdict::Reject,
        "no" => Verdict::Accept,
        _ => Verdict::Unparseable,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub attempt: u32,
    pub verdict: Verdict,
    pub accepted: bool,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub role: Role,
    pub trial: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recorded_at: Option<u64>,
}

impl CallRecord {
    fn of(role: Role, trial: u32, c: &Completion) -> Self {
        CallRecord {
            role,
            trial,
            cache_key: c.cache_key.clone(),
            recorded_at: c.recorded_at,
        }
    }
}

/// Verdicts and provider calls accumulated while processing one program.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub verdicts: Vec<VerdictRecord>,
    pub calls: Vec<CallRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("verifier rejected all {0} explanations")]
    VerifierExhausted(usize),
    #[error("program set is empty")]
    EmptyBatch,
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn call(provider: &dyn LlmProvider, log: &mut Transcript, req: LlmRequest) -> Result<Completion, ProviderError> {
    let c = provider.complete(&req)?;
    log.calls.push(CallRecord::of(req.role, req.trial, &c));
    Ok(c)
}

/// One verifier round for `explanation`.
pub fn verify(
    explanation: &str,
    p: &Program,
    bundle: &PromptBundle,
    provider: &dyn LlmProvider,
    attempt: u32,
    log: &mut Transcript,
) -> Result<Verdict, ProviderError> {
    verify_source(explanation, &print(p), bundle, provider, attempt, log)
}

pub fn verify_source(
    explanation: &str,
    source: &str,
    bundle: &PromptBundle,
    provider: &dyn LlmProvider,
    attempt: u32,
    log: &mut Transcript,
) -> Result<Verdict, ProviderError> {
    let prompt = bundle.render_verifier(source, explanation);
    let c = call(provider, log, LlmRequest::new(Role::Verifier, prompt, attempt, explanation))?;
    let verdict = parse_verdict(&c.text);
    let note = match verdict {
        Verdict::Unparseable => {
            log::warn!("unparseable verifier answer on attempt {attempt}, treating as rejection");
            Some("unparseable verdict, treated as rejection".to_string())
        }
        Verdict::Reject => Some("verifier reported jargon".to_string()),
        Verdict::Accept => None,
    };
    log.verdicts.push(VerdictRecord {
        attempt,
        verdict,
        accepted: verdict == Verdict::Accept,
        response: c.text,
        note,
    });
    Ok(verdict)
}

/// Samples explanations until one passes the verifier, at most `max_retries`
/// times. Attempt `i` uses trial index `i` for both the explainer and the verifier.
pub fn explain(
    p: &Program,
    bundle: &PromptBundle,
    provider: &dyn LlmProvider,
    max_retries: usize,
    log: &mut Transcript,
) -> Result<String, PipelineError> {
    explain_source(&print(p), bundle, provider, max_retries, log)
}

pub fn explain_source(
    source: &str,
    bundle: &PromptBundle,
    provider: &dyn LlmProvider,
    max_retries: usize,
    log: &mut Transcript,
) -> Result<String, PipelineError> {
    if max_retries == 0 {
        return Err(PipelineError::InvalidOptions("max_retries must be >= 1".into()));
    }
    let prompt = bundle.render_explainer(source);
    for attempt in 0..max_retries as u32 {
        let c = call(provider, log, LlmRequest::new(Role::Explainer, prompt.clone(), attempt, source))?;
        // an untagged answer is taken whole
        let text = extract_tag(&c.text, "explanation").unwrap_or_else(|| c.text.trim().to_string());
        if verify_source(&text, source, bundle, provider, attempt, log)? == Verdict::Accept {
            return Ok(text);
        }
    }
    Err(PipelineError::VerifierExhausted(max_retries))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum TrialFailure {
    MissingTag,
    Parse(String),
    Invalid(String),
    Provider(String),
}

impl std::fmt::Display for TrialFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrialFailure::MissingTag => write!(f, "no <strategy> tag in response"),
            TrialFailure::Parse(m) => write!(f, "parse error: {m}"),
            TrialFailure::Invalid(m) => write!(f, "invalid program: {m}"),
            TrialFailure::Provider(m) => write!(f, "provider error: {m}"),
        }
    }
}

/// One sampled program.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub trial: u32,
    pub source: Option<String>,
    pub program: Result<Program, TrialFailure>,
    pub call: Option<CallRecord>,
}

fn to_program(text: &str) -> (Option<String>, Result<Program, TrialFailure>) {
    let Some(body) = extract_tag(text, "strategy") else {
        return (None, Err(TrialFailure::MissingTag));
    };
    let body = strip_code_fence(&body).to_string();
    let prog = parse(&body)
        .map_err(|e| TrialFailure::Parse(e.to_string()))
        .and_then(|p| p.validate().map(|_| p).map_err(|e| TrialFailure::Invalid(e.to_string())));
    (Some(body), prog)
}

fn sample_all(provider: &dyn LlmProvider, role: Role, prompt: &str, payload: &str, k: usize) -> Vec<Sample> {
    let one = |trial: u32| -> Sample {
        match provider.complete(&LlmRequest::new(role, prompt, trial, payload)) {
            Ok(c) => {
                let (source, program) = to_program(&c.text);
                Sample {
                    trial,
                    source,
                    program,
                    call: Some(CallRecord::of(role, trial, &c)),
                }
            }
            Err(e) => Sample {
                trial,
                source: None,
                program: Err(TrialFailure::Provider(e.to_string())),
                call: None,
            },
        }
    };
    if provider.is_local() {
        (0..k as u32).into_par_iter().map(one).collect()
    } else {
        (0..k as u32).map(one).collect()
    }
}

/// k independent reconstructions from one explanation. Unparseable answers are
/// kept as failed samples, not retried.
pub fn reconstruct(explanation: &str, bundle: &PromptBundle, provider: &dyn LlmProvider, k: usize) -> Vec<Sample> {
    let prompt = bundle.render_reconstructor(explanation);
    sample_all(provider, Role::Reconstructor, &prompt, explanation, k)
}

/// k programs sampled from the map description alone.
pub fn kshot_samples(map_description: &str, bundle: &PromptBundle, provider: &dyn LlmProvider, k: usize) -> Vec<Sample> {
    let prompt = bundle.render_kshot(map_description);
    sample_all(provider, Role::KShot, &prompt, map_description, k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<TrialFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<BehaviorReport>,
}

/// Scores each sample against `pi`; identical programs are evaluated once.
fn score_samples(
    pi: &Program,
    samples: &[Sample],
    set: &OpponentSet,
    engine: &MetricEngine,
) -> Result<Vec<TrialRecord>, SimError> {
    let mut memo: HashMap<String, BehaviorReport> = HashMap::new();
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        let (failure, report) = match &s.program {
            Ok(q) => {
                let key = print(q);
                let r = match memo.get(&key) {
                    Some(r) => r.clone(),
                    None => {
                        let r = engine.report(pi, q, set)?;
                        memo.insert(key, r.clone());
                        r
                    }
                };
                (None, Some(r))
            }
            Err(f) => (Some(f.clone()), None),
        };
        out.push(TrialRecord {
            trial: s.trial,
            source: s.source.clone(),
            failure,
            scores: report.as_ref().map(Scores::from_report),
            report,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Scored,
    /// Every explanation was rejected; scored with the worst values.
    VerifierExhausted,
    /// Excluded from the batch means.
    Errored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub provider: String,
    pub model: String,
    pub k: usize,
    pub max_retries: usize,
    pub aggregation: Aggregation,
    pub calls: Vec<CallRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LintRun {
    pub program_id: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    pub verdicts: Vec<VerdictRecord>,
    pub reconstructions: Vec<TrialRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    pub provenance: Provenance,
}

impl LintRun {
    /// Number of trials that produced a program.
    pub fn successful_trials(&self) -> usize {
        self.reconstructions.iter().filter(|t| t.failure.is_none()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LintOptions {
    pub k: usize,
    pub max_retries: usize,
    pub aggregation: Aggregation,
    pub granularity: ActionGranularity,
    /// Concurrent programs; 0 uses rayon's default pool.
    pub workers: usize,
}

impl Default for LintOptions {
    fn default() -> Self {
        LintOptions {
            k: DEFAULT_K,
            max_retries: DEFAULT_MAX_RETRIES,
            aggregation: Aggregation::Conservative,
            granularity: ActionGranularity::JointState,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LintSummary {
    /// Mean over programs that were not errored; `None` when none were.
    pub scores: Option<Scores>,
    pub programs: usize,
    pub scored: usize,
    pub verifier_exhausted: usize,
    pub errored: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LintBatch {
    pub summary: LintSummary,
    pub runs: Vec<LintRun>,
}

impl LintBatch {
    /// Aggregated scores of every counted program, in input order.
    pub fn per_program(&self) -> Vec<Scores> {
        self.runs.iter().filter_map(|r| r.scores).collect()
    }
}

/// Full pipeline for one program.
pub fn lint_program(
    named: &NamedProgram,
    set: &OpponentSet,
    bundle: &PromptBundle,
    provider: &dyn LlmProvider,
    opts: &LintOptions,
    engine: &MetricEngine,
) -> Result<LintRun, SimError> {
    let mut log = Transcript::default();
    let provenance = |log: Transcript| Provenance {
        provider: provider.name(),
        model: provider.model().to_string(),
        k: opts.k,
        max_retries: opts.max_retries,
        aggregation: opts.aggregation,
        calls: log.calls,
    };
    let explanation = explain(&named.program, bundle, provider, opts.max_retries, &mut log);
    let explanation = match explanation {
        Ok(e) => e,
        Err(e) => {
            let status = match e {
                PipelineError::VerifierExhausted(_) => RunStatus::VerifierExhausted,
                _ => RunStatus::Errored,
            };
            let scores = (status == RunStatus::VerifierExhausted).then(Scores::worst);
            return Ok(LintRun {
                program_id: named.name.clone(),
                status,
                error: Some(e.to_string()),
                explanation: None,
                verdicts: log.verdicts.clone(),
                reconstructions: Vec::new(),
                scores,
                provenance: provenance(log),
            });
        }
    };
    let samples = reconstruct(&explanation, bundle, provider, opts.k);
    log.calls.extend(samples.iter().filter_map(|s| s.call.clone()));
    let trials = score_samples(&named.program, &samples, set, engine)?;
    let provider_error = trials.iter().find_map(|t| match &t.failure {
        Some(TrialFailure::Provider(m)) => Some(m.clone()),
        _ => None,
    });
    let (status, error, scores) = match provider_error {
        Some(m) => (RunStatus::Errored, Some(m), None),
        None => {
            let per: Vec<Option<Scores>> = trials.iter().map(|t| t.scores).collect();
            (RunStatus::Scored, None, Some(Scores::aggregate(&per, opts.aggregation)))
        }
    };
    Ok(LintRun {
        program_id: named.name.clone(),
        status,
        error,
        explanation: Some(explanation),
        verdicts: log.verdicts.clone(),
        reconstructions: trials,
        scores,
        provenance: provenance(log),
    })
}

fn check(programs: &[NamedProgram], opts: &LintOptions) -> Result<(), PipelineError> {
    if programs.is_empty() {
        return Err(PipelineError::EmptyBatch);
    }
    if opts.k == 0 {
        return Err(PipelineError::InvalidOptions("k must be >= 1".into()));
    }
    if opts.max_retries == 0 {
        return Err(PipelineError::InvalidOptions("max_retries must be >= 1".into()));
    }
    Ok(())
}

pub fn summarize(runs: &[LintRun]) -> LintSummary {
    let counted: Vec<Scores> = runs.iter().filter_map(|r| r.scores).collect();
    LintSummary {
        scores: Scores::mean(&counted),
        programs: runs.len(),
        scored: runs.iter().filter(|r| r.status == RunStatus::Scored).count(),
        verifier_exhausted: runs.iter().filter(|r| r.status == RunStatus::VerifierExhausted).count(),
        errored: runs
            .iter()
            .filter(|r| r.status == RunStatus::Errored)
            .map(|r| r.program_id.clone())
            .collect(),
    }
}

/// LINT over a program set: per-program aggregation of k trials, then the
/// mean over programs for each metric.
pub fn lint_score(
    programs: &[NamedProgram],
    set: &OpponentSet,
    bundle: &PromptBundle,
    provider: &dyn LlmProvider,
    opts: &LintOptions,
) -> Result<LintBatch, PipelineError> {
    lint_score_with(programs, set, bundle, provider, opts, &MetricEngine::new(opts.granularity))
}

pub fn lint_score_with(
    programs: &[NamedProgram],
    set: &OpponentSet,
    bundle: &PromptBundle,
    provider: &dyn LlmProvider,
    opts: &LintOptions,
    engine: &MetricEngine,
) -> Result<LintBatch, PipelineError> {
    check(programs, opts)?;
    let work = || -> Result<Vec<LintRun>, SimError> {
        programs
            .par_iter()
            .map(|p| lint_program(p, set, bundle, provider, opts, engine))
            .collect()
    };
    let runs = if opts.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| PipelineError::InvalidOptions(e.to_string()))?
            .install(work)?
    } else {
        work()?
    };
    Ok(LintBatch {
        summary: summarize(&runs),
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestTrials {
    pub action: usize,
    pub outcome: usize,
    pub feature: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KShotReport {
    /// Best value per metric over the k samples.
    pub scores: Scores,
    pub best: BestTrials,
    pub trials: Vec<TrialRecord>,
}

/// Scores pre-drawn k-shot samples against `pi`, keeping the best value of
/// each metric. Failed samples count as the worst value.
pub fn kshot_report(pi: &Program, samples: &[Sample], set: &OpponentSet, engine: &MetricEngine) -> Result<KShotReport, PipelineError> {
    if samples.is_empty() {
        return Err(PipelineError::InvalidOptions("k must be >= 1".into()));
    }
    let trials = score_samples(pi, samples, set, engine)?;
    let per: Vec<Scores> = trials.iter().map(|t| t.scores.unwrap_or_else(Scores::worst)).collect();
    let best_of = |m: Metric| -> usize {
        let mut b = 0;
        for (i, s) in per.iter().enumerate() {
            let better = if m.higher_is_better() { s.get(m) > per[b].get(m) } else { s.get(m) < per[b].get(m) };
            if better {
                b = i;
            }
        }
        b
    };
    let best = BestTrials {
        action: best_of(Metric::Action),
        outcome: best_of(Metric::Outcome),
        feature: best_of(Metric::Feature),
    };
    Ok(KShotReport {
        scores: Scores {
            action: per[best.action].action,
            outcome: per[best.outcome].outcome,
            feature: per[best.feature].feature,
        },
        best,
        trials,
    })
}

pub fn kshot_baseline(
    map_description: &str,
    bundle: &PromptBundle,
    provider: &dyn LlmProvider,
    k: usize,
    pi: &Program,
    set: &OpponentSet,
) -> Result<KShotReport, PipelineError> {
    let samples = kshot_samples(map_description, bundle, provider, k);
    kshot_report(pi, &samples, set, &MetricEngine::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn min_rule_on_action() {
        let v = [Some(0.9), Some(0.6), Some(0.8)];
        assert_eq!(aggregate(Metric::Action, &v, Aggregation::Conservative), 0.6);
        assert_eq!(aggregate(Metric::Outcome, &v, Aggregation::Conservative), 0.6);
    }

    #[test]
    fn feature_uses_max_unless_literal() {
        let v = [Some(0.1), Some(0.4), Some(0.2)];
        assert_eq!(aggregate(Metric::Feature, &v, Aggregation::Conservative), 0.4);
        assert_eq!(aggregate(Metric::Feature, &v, Aggregation::LiteralMin), 0.1);
    }

    #[test]
    fn failed_trials_are_worst() {
        assert_eq!(aggregate(Metric::Action, &[Some(0.9), None], Aggregation::Conservative), 0.0);
        assert_eq!(aggregate(Metric::Feature, &[Some(0.2), None], Aggregation::Conservative), 1.0);
        // literal min still substitutes the worst value, so the failure only
        // matters when it is the minimum
        assert_eq!(aggregate(Metric::Feature, &[Some(0.2), None], Aggregation::LiteralMin), 0.2);
        assert_eq!(aggregate(Metric::Action, &[], Aggregation::Conservative), 0.0);
        assert_eq!(aggregate(Metric::Feature, &[], Aggregation::LiteralMin), 1.0);
    }

    #[test]
    fn verdict_parsing() {
        assert_eq!(parse_verdict("Yes.\n\nIt uses loops"), Verdict::Reject);
        assert_eq!(parse_verdict("  **No**, it is fine"), Verdict::Accept);
        assert_eq!(parse_verdict("NO"), Verdict::Accept);
        assert_eq!(parse_verdict("maybe, hard to say"), Verdict::Unparseable);
        assert_eq!(parse_verdict("Nope"), Verdict::Unparseable);
        assert_eq!(parse_verdict(""), Verdict::Unparseable);
    }

    #[test]
    fn scores_mean() {
        assert_eq!(Scores::mean(&[]), None);
        let m = Scores::mean(&[Scores { action: 1.0, outcome: 0.5, feature: 0.0 }, Scores { action: 0.0, outcome: 0.5, feature: 1.0 }]).unwrap();
        assert_eq!((m.action, m.outcome, m.feature), (0.5, 0.5, 0.5));
    }

    fn opt_vals() -> impl Strategy<Value = Vec<Option<f64>>> {
        prop::collection::vec(prop::option::weighted(0.8, 0.0f64..=1.0), 0..8)
    }

    proptest! {
        #[test]
        fn adding_a_trial_never_helps(vals in opt_vals(), extra in prop::option::weighted(0.8, 0.0f64..=1.0)) {
            let mut more = vals.clone();
            more.push(extra);
            for m in Metric::ALL {
                let a = aggregate(m, &vals, Aggregation::Conservative);
                let b = aggregate(m, &more, Aggregation::Conservative);
                if vals.is_empty() {
                    continue;
                }
                if m.higher_is_better() {
                    prop_assert!(b <= a);
                } else {
                    prop_assert!(b >= a);
                }
            }
        }

        #[test]
        fn aggregate_picks_a_member_or_worst(vals in opt_vals()) {
            for m in Metric::ALL {
                for rule in [Aggregation::Conservative, Aggregation::LiteralMin] {
                    let a = aggregate(m, &vals, rule);
                    let members: Vec<f64> = vals.iter().map(|v| v.unwrap_or(m.worst())).collect();
                    prop_assert!(members.contains(&a) || (members.is_empty() && a == m.worst()));
                }
            }
        }
    }
}
