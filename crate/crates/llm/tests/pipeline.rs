use lint_core::fixtures::{self, NamedProgram};
use lint_core::metrics::{action_metric, behavior_report, OpponentSet};
use lint_core::microlang::{parse, print, Program};
use lint_llm::*;

const EXPLANATION_1: &str = include_str!("data/explanation_1.txt");
const EXPLANATION_2: &str = include_str!("data/explanation_2.txt");
const EXPLANATION_3: &str = include_str!("data/explanation_3.txt");
const VERDICT_1: &str = include_str!("data/verdict_1.txt");
const VERDICT_2: &str = include_str!("data/verdict_2.txt");

fn small_set() -> OpponentSet {
    let mut s = OpponentSet::bundled(fixtures::MAP_8X8).unwrap();
    s.opponents.truncate(3);
    s
}

fn tiered() -> NamedProgram {
    NamedProgram::new("tiered", fixtures::tiered())
}

fn opts(k: usize) -> LintOptions {
    LintOptions {
        k,
        ..LintOptions::default()
    }
}

#[test]
fn replayed_explanation_is_returned_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let b = PromptBundle::microrts();
    let src = print(&fixtures::tiered());
    let cache = ReplayCache::new(dir.path(), "recorded");
    let wrapped = format!("Sure.\n<explanation>\n{EXPLANATION_3}</explanation>\n");
    cache.seed(Role::Explainer, &b.render_explainer(&src), 0, &wrapped, 1).unwrap();
    let expected = EXPLANATION_3.trim();
    cache
        .seed(Role::Verifier, &b.render_verifier(&src, expected), 0, "No. It talks about priorities only.", 1)
        .unwrap();
    let mut log = Transcript::default();
    let e = explain(&fixtures::tiered(), &b, &cache, 3, &mut log).unwrap();
    assert_eq!(e, expected);
    assert!(e.starts_with("This strategy plays in two phases"));
    assert_eq!(log.verdicts.len(), 1);
    assert!(log.calls.iter().all(|c| c.cache_key.is_some() && c.recorded_at == Some(1)));
}

#[test]
fn clean_explanation_first_try() {
    let m = ScriptedMock::new().otherwise(Role::Explainer, "<explanation>Gather, then attack.</explanation>");
    let mut log = Transcript::default();
    let e = explain(&fixtures::tiered(), &PromptBundle::microrts(), &m, 3, &mut log).unwrap();
    assert_eq!(e, "Gather, then attack.");
    assert_eq!(log.verdicts.len(), 1);
    assert_eq!(log.calls.iter().filter(|c| c.role == Role::Verifier).count(), 1);
}

#[test]
fn jargon_twice_then_clean() {
    let m = ScriptedMock::new()
        .on(Role::Explainer, 0, "<explanation>A nested for-loop trains workers.</explanation>")
        .on(Role::Explainer, 1, "<explanation>The outer loop attacks.</explanation>")
        .on(Role::Explainer, 2, "<explanation>Workers first, then heavies.</explanation>")
        .on(Role::Verifier, 0, "Yes. It says for-loop.")
        .on(Role::Verifier, 1, "Yes. It says loop.")
        .on(Role::Verifier, 2, "No.");
    let mut log = Transcript::default();
    let e = explain(&fixtures::tiered(), &PromptBundle::microrts(), &m, 3, &mut log).unwrap();
    assert_eq!(e, "Workers first, then heavies.");
    assert_eq!(log.verdicts.len(), 3);
    assert_eq!(log.verdicts.iter().filter(|v| !v.accepted).count(), 2);
    assert!(log.verdicts[0].response.contains("for-loop"));
}

#[test]
fn verifier_exhaustion() {
    let m = ScriptedMock::new().otherwise(Role::Verifier, "Yes, jargon everywhere.");
    let mut log = Transcript::default();
    let r = explain(&fixtures::tiered(), &PromptBundle::microrts(), &m, 3, &mut log);
    assert!(matches!(r, Err(PipelineError::VerifierExhausted(3))));
    assert_eq!(log.verdicts.len(), 3);
    assert!(log.verdicts.iter().all(|v| !v.accepted && v.note.is_some()));
}

#[test]
fn recorded_verifier_answers() {
    let b = PromptBundle::c_problems();
    let p = Program::default();
    let accept = ScriptedMock::new().otherwise(Role::Verifier, VERDICT_2);
    let mut log = Transcript::default();
    assert_eq!(verify(EXPLANATION_2, &p, &b, &accept, 0, &mut log).unwrap(), Verdict::Accept);
    let reject = ScriptedMock::new().otherwise(Role::Verifier, VERDICT_1);
    assert_eq!(verify(EXPLANATION_1, &p, &b, &reject, 0, &mut log).unwrap(), Verdict::Reject);
    let vague = ScriptedMock::new().otherwise(Role::Verifier, "maybe, it depends");
    assert_eq!(verify(EXPLANATION_2, &p, &b, &vague, 0, &mut log).unwrap(), Verdict::Unparseable);
    assert!(log.verdicts[2].note.as_deref().unwrap().contains("unparseable"));
    assert!(!log.verdicts[2].accepted);
}

#[test]
fn replayed_reconstruction_parses() {
    let dir = tempfile::tempdir().unwrap();
    let b = PromptBundle::microrts();
    let cache = ReplayCache::new(dir.path(), "recorded");
    let explanation = EXPLANATION_3.trim();
    let response = format!("<strategy>\n{}</strategy>", fixtures::TIERED_VARIANT);
    cache.seed(Role::Reconstructor, &b.render_reconstructor(explanation), 0, &response, 1).unwrap();
    let s = reconstruct(explanation, &b, &cache, 1);
    let p = s[0].program.as_ref().unwrap();
    assert!(p.validate().is_ok());
    assert_eq!(p, &parse(fixtures::TIERED_VARIANT).unwrap());
}

#[test]
fn echo_reconstructions_are_equal() {
    let src = print(&fixtures::tiered());
    let s = reconstruct(&src, &PromptBundle::microrts(), &EchoMock, 5);
    assert_eq!(s.len(), 5);
    assert!(s.iter().all(|x| x.program.as_ref().unwrap() == &fixtures::tiered()));
}

#[test]
fn one_invalid_trial_is_recorded() {
    let m = ScriptedMock::new().on(Role::Reconstructor, 2, "<strategy>for(Unit u){ u.fly() }</strategy>");
    let s = reconstruct(&print(&fixtures::tiered()), &PromptBundle::microrts(), &m, 5);
    assert_eq!(s.iter().filter(|x| x.program.is_ok()).count(), 4);
    assert!(matches!(s[2].program, Err(TrialFailure::Parse(_))));
    let untagged = ScriptedMock::new().on(Role::Reconstructor, 0, "for(Unit u){ u.idle() }");
    let s = reconstruct("x", &PromptBundle::microrts(), &untagged, 1);
    assert_eq!(s[0].program, Err(TrialFailure::MissingTag));
}

#[test]
fn echo_gives_reflexive_lint() {
    let progs: Vec<NamedProgram> = fixtures::policies().into_iter().take(4).collect();
    let batch = lint_score(&progs, &small_set(), &PromptBundle::microrts(), &EchoMock, &opts(5)).unwrap();
    let s = batch.summary.scores.unwrap();
    assert_eq!((s.action, s.outcome, s.feature), (1.0, 1.0, 0.0));
    assert_eq!(batch.summary.scored, 4);
    for r in &batch.runs {
        assert_eq!(r.reconstructions.len(), 5);
        assert_eq!(r.successful_trials(), 5);
    }
}

#[test]
fn empty_mock_matches_metric_module() {
    let set = small_set();
    let p = tiered();
    let batch = lint_score(std::slice::from_ref(&p), &set, &PromptBundle::microrts(), &EmptyMock, &opts(5)).unwrap();
    let s = batch.summary.scores.unwrap();
    assert_eq!(s.action, action_metric(&p.program, &Program::default(), &set).unwrap());
    let r = behavior_report(&p.program, &Program::default(), &set).unwrap();
    assert_eq!((s.outcome, s.feature), (r.outcome, r.feature));
}

#[test]
fn failed_trial_drags_to_worst() {
    let m = ScriptedMock::new().on(Role::Reconstructor, 1, "<strategy>garbage(</strategy>");
    let batch = lint_score(&[tiered()], &small_set(), &PromptBundle::microrts(), &m, &opts(3)).unwrap();
    let s = batch.runs[0].scores.unwrap();
    assert_eq!((s.action, s.outcome, s.feature), (0.0, 0.0, 1.0));
    assert_eq!(batch.runs[0].status, RunStatus::Scored);
}

#[test]
fn exhausted_program_scores_worst_and_errors_are_excluded() {
    let set = small_set();
    let b = PromptBundle::microrts();
    let jargon = ScriptedMock::new().otherwise(Role::Verifier, "Yes.");
    let batch = lint_score(&[tiered()], &set, &b, &jargon, &opts(2)).unwrap();
    assert_eq!(batch.runs[0].status, RunStatus::VerifierExhausted);
    assert_eq!(batch.summary.scores, Some(Scores::worst()));

    let broken = ScriptedMock::new().fail_on(Role::Explainer, 0, "connection reset");
    let progs = vec![tiered(), NamedProgram::new("other", fixtures::tiered())];
    let batch = lint_score(&progs, &set, &b, &broken, &opts(2)).unwrap();
    assert_eq!(batch.summary.errored.len(), 2);
    assert_eq!(batch.summary.scores, None);
    assert!(batch.runs[0].error.as_deref().unwrap().contains("connection reset"));
}

#[test]
fn batch_rejects_bad_input() {
    let b = PromptBundle::microrts();
    assert!(matches!(lint_score(&[], &small_set(), &b, &EchoMock, &opts(5)), Err(PipelineError::EmptyBatch)));
    assert!(matches!(lint_score(&[tiered()], &small_set(), &b, &EchoMock, &opts(0)), Err(PipelineError::InvalidOptions(_))));
}

#[test]
fn replay_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let set = small_set();
    let b = PromptBundle::microrts();
    let progs: Vec<NamedProgram> = fixtures::policies().into_iter().take(2).collect();
    let rec = CachedProvider::new(LineDropMock::new(0.3, 5), dir.path());
    let first = lint_score(&progs, &set, &b, &rec, &opts(3)).unwrap();
    let replay = ReplayCache::new(dir.path(), "line-drop");
    let a = serde_json::to_string_pretty(&lint_score(&progs, &set, &b, &replay, &opts(3)).unwrap()).unwrap();
    let c = serde_json::to_string_pretty(&lint_score(&progs, &set, &b, &replay, &opts(3)).unwrap()).unwrap();
    assert_eq!(a, c);
    // summary numbers agree with the recording run
    let back: LintBatch = serde_json::from_str(&a).unwrap();
    assert_eq!(back.summary.scores, first.summary.scores);
}

#[test]
fn kshot_with_original_among_samples_is_reflexive() {
    let set = small_set();
    let src = print(&fixtures::tiered());
    let m = ScriptedMock::new()
        .otherwise(Role::KShot, "<strategy></strategy>")
        .on(Role::KShot, 3, format!("<strategy>{src}</strategy>"));
    let r = kshot_baseline("a map", &PromptBundle::microrts(), &m, 5, &fixtures::tiered(), &set).unwrap();
    assert_eq!((r.scores.action, r.scores.outcome, r.scores.feature), (1.0, 1.0, 0.0));
    assert_eq!(r.best.action, 3);
}

#[test]
fn kshot_empty_and_single() {
    let set = small_set();
    let b = PromptBundle::microrts();
    let pi = fixtures::tiered();
    let r = kshot_baseline("a map", &b, &EmptyMock, 4, &pi, &set).unwrap();
    let expect = behavior_report(&pi, &Program::default(), &set).unwrap();
    assert_eq!((r.scores.action, r.scores.outcome, r.scores.feature), (expect.action, expect.outcome, expect.feature));
    let one = kshot_baseline("a map", &b, &EmptyMock, 1, &pi, &set).unwrap();
    assert_eq!(one.trials.len(), 1);
    assert_eq!(one.scores, r.scores);
}

#[test]
fn line_drop_means_degrade_with_q() {
    let set = small_set();
    let b = PromptBundle::microrts();
    let progs: Vec<NamedProgram> = fixtures::policies().into_iter().take(5).collect();
    let mean = |q: f64| {
        lint_score(&progs, &set, &b, &LineDropMock::new(q, 11), &opts(3))
            .unwrap()
            .summary
            .scores
            .unwrap()
    };
    let (a, c) = (mean(0.0), mean(0.5));
    assert_eq!(a.action, 1.0);
    assert!(c.action <= a.action && c.feature >= a.feature);
}
