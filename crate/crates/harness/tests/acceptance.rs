//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Criterion 11 talks to a real chat-completions endpoint and only runs when
//! `LINT_LIVE_ENDPOINT` is set (key in `LINT_API_KEY`, model in `LINT_LIVE_MODEL`).

use std::path::Path;
use std::time::{Duration, Instant};

use lint_core::fixtures::{self, NamedProgram};
use lint_core::metrics::{behavior_report, generate_suite, io_metric, select_policy_indices, ExecSpec, IoCase, OpponentSet};
use lint_core::microlang::random::{random_program, GenConfig};
use lint_core::microlang::{parse, print, Program};
use lint_core::obfuscate::{line_delta, obfuscate, verify_neutral, ObfuscationLevel};
use lint_core::sim::{evaluate_policy, play_match, CommandKind, Effect, FeatureVector, Player, UnitKind};
use lint_harness::config::{Baseline, ExperimentConfig};
use lint_harness::experiment::{run_experiment, write_outputs, SUMMARY_JSON};
use lint_llm::pipeline::{aggregate, Aggregation, Metric};
use lint_llm::{lint_score, EchoMock, EmptyMock, HttpConfig, HttpProvider, LineDropMock, LintBatch, LintOptions, LintRun, MockKind, ProviderKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(cond: bool, detail: impl Into<String>) -> Outcome {
    if cond {
        Ok(detail.into())
    } else {
        Err(detail.into())
    }
}

fn c1_round_trip() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = GenConfig {
        allow_alias: false,
        ..GenConfig::default()
    };
    let mut failures = 0;
    for _ in 0..1000 {
        let p = random_program(&mut rng, &cfg);
        if parse(&print(&p)).as_ref() != Ok(&p) {
            failures += 1;
        }
    }
    let el = t.elapsed();
    check(failures == 0 && el < Duration::from_secs(10), format!("1000 programs, {failures} failures, {el:.2?} (limit 10s)"))
}

fn c2_priority() -> Outcome {
    let s = fixtures::map_state(fixtures::MAP_16X16).map_err(|e| e.to_string())?;
    let a = evaluate_policy(&fixtures::tiered(), &s, Player::P0).map_err(|e| e.to_string())?;
    let base = s
        .units
        .iter()
        .find(|u| u.kind == UnitKind::Base && u.owner == Some(Player::P0))
        .ok_or("no base")?;
    let act = a.get(&base.id).ok_or("base unassigned")?;
    let trains_worker = act.command == CommandKind::Train && matches!(act.effect, Effect::Produce { kind: UnitKind::Worker, .. });
    let spending = a.values().filter(|x| matches!(x.effect, Effect::Produce { .. })).count();
    check(
        trains_worker && spending == 1,
        format!("base assignment {:?}, {spending} resource-consuming assignment(s)", act.command),
    )
}

fn c3_reflexivity() -> Outcome {
    let t = Instant::now();
    let set = OpponentSet::bundled(fixtures::MAP_16X16).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    for p in fixtures::policies() {
        let r = behavior_report(&p.program, &p.program, &set).map_err(|e| e.to_string())?;
        if (r.action, r.outcome, r.feature) != (1.0, 1.0, 0.0) {
            bad.push(p.name);
        }
    }
    let el = t.elapsed();
    check(
        bad.is_empty() && el < Duration::from_secs(120),
        format!("20 policies x {} opponents, non-reflexive {bad:?}, {el:.2?} (limit 2min)", set.len()),
    )
}

fn c4_neutrality() -> Outcome {
    let mut bad = Vec::new();
    let mut deltas = (Vec::new(), Vec::new());
    for map in [fixtures::MAP_16X16, fixtures::MAP_8X8] {
        let set = OpponentSet::bundled(map).map_err(|e| e.to_string())?;
        for p in fixtures::policies() {
            for level in ObfuscationLevel::ALL {
                let q = obfuscate(&p.program, level).map_err(|e| e.to_string())?;
                if !verify_neutral(&p.program, &q, &set).map_err(|e| e.to_string())?.neutral {
                    bad.push(format!("{}/{}/L{}", map, p.name, level.number()));
                }
                if map == fixtures::MAP_16X16 {
                    let d = line_delta(&p.program, &q);
                    match level {
                        ObfuscationLevel::One => deltas.0.push(d),
                        ObfuscationLevel::Two => deltas.1.push(d),
                    }
                }
            }
        }
    }
    let in_range = |v: &[i64], c: i64| v.iter().all(|d| (d - c).abs() <= 2);
    let span = |v: &[i64]| format!("{}..={}", v.iter().min().unwrap(), v.iter().max().unwrap());
    check(
        bad.is_empty() && in_range(&deltas.0, 10) && in_range(&deltas.1, 23),
        format!("80 checks, diverging {bad:?}, level 1 delta {}, level 2 delta {}", span(&deltas.0), span(&deltas.1)),
    )
}

/// Brute-force replay oracle for comparing a policy with the empty program.
fn empty_oracle(p: &Program, set: &OpponentSet) -> Result<(f64, f64, f64), String> {
    let empty = Program::default();
    let (mut states, mut empty_states, mut same_outcome, mut dist) = (0usize, 0usize, 0usize, 0.0);
    for o in &set.opponents {
        let a = play_match(p, &o.program, &set.map, &set.options).map_err(|e| e.to_string())?;
        let b = play_match(&empty, &o.program, &set.map, &set.options).map_err(|e| e.to_string())?;
        states += a.decision_log.len();
        empty_states += a.decision_log.iter().filter(|e| e.assignment.is_empty()).count();
        same_outcome += usize::from(a.outcome == b.outcome);
        dist += l1_normalized(&a.features, &b.features);
    }
    let n = set.len() as f64;
    let action = if states == 0 { 1.0 } else { empty_states as f64 / states as f64 };
    Ok((action, same_outcome as f64 / n, dist / n))
}

fn l1_normalized(a: &FeatureVector, b: &FeatureVector) -> f64 {
    let mut s = 0.0;
    for j in 0..7 {
        let (x, y) = (f64::from(a.0[j]), f64::from(b.0[j]));
        s += (x - y).abs() / x.max(y).max(1.0);
    }
    s / 7.0
}

fn c5_oracle_identity() -> Outcome {
    let set = OpponentSet::bundled(fixtures::MAP_16X16).map_err(|e| e.to_string())?;
    let programs = fixtures::policies();
    let b = lint_llm::PromptBundle::microrts();
    let opts = LintOptions::default();
    let echo = lint_score(&programs, &set, &b, &EchoMock, &opts).map_err(|e| e.to_string())?;
    let s = echo.summary.scores.ok_or("echo produced no scores")?;
    let echo_ok = (s.action, s.outcome, s.feature) == (1.0, 1.0, 0.0) && echo.summary.scored == programs.len();

    let empty = lint_score(&programs, &set, &b, &EmptyMock, &opts).map_err(|e| e.to_string())?;
    let mut mismatched = Vec::new();
    for (p, run) in programs.iter().zip(&empty.runs) {
        let got = run.scores.ok_or_else(|| format!("{} unscored", p.name))?;
        let want = empty_oracle(&p.program, &set)?;
        if (got.action, got.outcome, got.feature) != want {
            mismatched.push(p.name.clone());
        }
    }
    check(
        echo_ok && mismatched.is_empty(),
        format!("echo ({}, {}, {}); empty mock differs from replay oracle on {mismatched:?}", s.action, s.outcome, s.feature),
    )
}

fn c6_degradation() -> Outcome {
    let t = Instant::now();
    let set = OpponentSet::bundled(fixtures::MAP_16X16).map_err(|e| e.to_string())?;
    let programs = fixtures::policies();
    let b = lint_llm::PromptBundle::microrts();
    let mut means = Vec::new();
    for q in [0.0, 0.2, 0.5] {
        let batch = lint_score(&programs, &set, &b, &LineDropMock::new(q, 11), &LintOptions::default()).map_err(|e| e.to_string())?;
        let s = batch.summary.scores.ok_or("no scores")?;
        means.push((q, s.action, s.feature));
    }
    let el = t.elapsed();
    let monotone = means.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].2 >= w[0].2);
    let shown: Vec<String> = means.iter().map(|(q, a, f)| format!("q={q}: action {a:.3} feature {f:.3}")).collect();
    check(monotone && el < Duration::from_secs(300), format!("{}; {el:.2?} (limit 5min)", shown.join(", ")))
}

fn c7_aggregation() -> Outcome {
    let c = Aggregation::Conservative;
    let l = Aggregation::LiteralMin;
    let v = [Some(0.4), Some(0.9), Some(0.6)];
    let cases = [
        (aggregate(Metric::Action, &v, c), 0.4),
        (aggregate(Metric::Outcome, &v, c), 0.4),
        (aggregate(Metric::Feature, &v, c), 0.9),
        (aggregate(Metric::Feature, &v, l), 0.4),
        (aggregate(Metric::Action, &v, l), 0.4),
        (aggregate(Metric::Action, &[Some(0.7), None], c), 0.0),
        (aggregate(Metric::Feature, &[Some(0.2), None], c), 1.0),
        (aggregate(Metric::Feature, &[Some(0.2), None], l), 0.2),
        (aggregate(Metric::Outcome, &[], c), 0.0),
    ];
    let wrong: Vec<usize> = cases.iter().enumerate().filter(|(_, (g, w))| g != w).map(|(i, _)| i).collect();
    check(wrong.is_empty(), format!("{} cases, wrong {wrong:?}", cases.len()))
}

fn c8_selection() -> Outcome {
    let got = select_policy_indices(1000, 20).map_err(|e| e.to_string())?;
    // floor(i * 999 / 19) by repeated subtraction
    let brute: Vec<usize> = (0..20)
        .map(|i| {
            let (mut num, mut q) = (i * 999, 0);
            while num >= 19 {
                num -= 19;
                q += 1;
            }
            q
        })
        .collect();
    check(
        got == brute && got[0] == 0 && got[19] == 999 && got[7] == 368,
        format!("first {}, index 7 -> {}, last {}", got[0], got[7], got[19]),
    )
}

fn write_script(dir: &Path, name: &str, body: &str) -> Result<ExecSpec, String> {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}")).map_err(|e| e.to_string())?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).map_err(|e| e.to_string())?;
    }
    Ok(ExecSpec::new(path))
}

const FACTORIAL: &str = "n=$1\nr=1\nwhile [ \"$n\" -gt 1 ]; do r=$((r * n)); n=$((n - 1)); done\necho \"$r\"\n";

fn c9_io_metric() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut order: Vec<u32> = (1..=20).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let suite = generate_suite(9, 20, |_, i| IoCase {
        args: vec![order[i].to_string()],
        stdin: String::new(),
    });
    let wrong: Vec<String> = order[..3].iter().map(u32::to_string).collect();
    let reference = write_script(dir.path(), "fact.sh", FACTORIAL)?;
    let failing = write_script(dir.path(), "fail.sh", "exit 1\n")?;
    let mutant = write_script(
        dir.path(),
        "mutant.sh",
        &format!("case \"$1\" in {}) echo 0; exit 0;; esac\n{FACTORIAL}", wrong.join("|")),
    )?;
    let t = Duration::from_secs(10);
    let run = |c: &ExecSpec| io_metric(&reference, c, &suite, t).map(|r| r.score).map_err(|e| e.to_string());
    let (a, b, c) = (run(&reference)?, run(&failing)?, run(&mutant)?);
    check(
        (a, b, c) == (1.0, 0.0, 0.85),
        format!("self {a}, always-failing {b}, mutant wrong on {} -> {c}", wrong.join(",")),
    )
}

fn c10_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig {
        map: fixtures::MAP_8X8.to_string(),
        baselines: Baseline::ALL.to_vec(),
        ..ExperimentConfig::default()
    };
    cfg.provider.kind = ProviderKind::Mock;
    cfg.provider.mock = MockKind::LineDrop;
    cfg.provider.q = 0.2;
    cfg.provider.cache_dir = Some(dir.path().join("cache"));
    let toml_path = dir.path().join("exp.toml");
    run_experiment(&cfg).map_err(|e| e.to_string())?;

    cfg.provider.kind = ProviderKind::Replay;
    cfg.provider.replay_model = Some(cfg.provider.model_name());
    std::fs::write(&toml_path, cfg.to_toml()).map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    for i in 0..2 {
        let cfg = ExperimentConfig::load(&toml_path).map_err(|e| e.to_string())?;
        let r = run_experiment(&cfg).map_err(|e| e.to_string())?;
        if !r.errored().is_empty() {
            return Err(format!("replay errored on {:?}", r.errored()));
        }
        let out = dir.path().join(format!("out{i}"));
        write_outputs(&r, &out).map_err(|e| e.to_string())?;
        bytes.push(std::fs::read(out.join(SUMMARY_JSON)).map_err(|e| e.to_string())?);
    }
    check(bytes[0] == bytes[1], format!("two replays, summary.json {} bytes, identical={}", bytes[0].len(), bytes[0] == bytes[1]))
}

fn c11_live() -> Result<Verdict, String> {
    let Ok(endpoint) = std::env::var("LINT_LIVE_ENDPOINT") else {
        return Ok(Verdict::Skip("LINT_LIVE_ENDPOINT not set".into()));
    };
    let mut cfg = HttpConfig {
        endpoint,
        ..HttpConfig::default()
    };
    if let Ok(m) = std::env::var("LINT_LIVE_MODEL") {
        cfg.model = m;
    }
    let provider = HttpProvider::new(cfg);
    let mut set = OpponentSet::bundled(fixtures::MAP_8X8).map_err(|e| e.to_string())?;
    set.opponents.truncate(3);
    let p = NamedProgram::new("tiered", fixtures::tiered());
    let opts = LintOptions {
        k: 1,
        ..LintOptions::default()
    };
    let batch: LintBatch = lint_score(&[p], &set, &lint_llm::PromptBundle::microrts(), &provider, &opts).map_err(|e| e.to_string())?;
    let json = serde_json::to_string(&batch.runs[0]).map_err(|e| e.to_string())?;
    let back: LintRun = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    Ok(Verdict::Pass(format!("status {:?}, {} provider calls", back.status, back.provenance.calls.len())))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("parser round trip", c1_round_trip),
        ("priority semantics", c2_priority),
        ("metric reflexivity", c3_reflexivity),
        ("obfuscation neutrality", c4_neutrality),
        ("oracle identity", c5_oracle_identity),
        ("degradation ordering", c6_degradation),
        ("trial aggregation", c7_aggregation),
        ("policy selection", c8_selection),
        ("io metric", c9_io_metric),
        ("reproducibility", c10_reproducibility),
    ];
    let mut failed = 0;
    let mut report = |i: usize, name: &str, v: Verdict| {
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("criterion {i:>2} {tag} {name}: {detail}");
    };
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let v = match f() {
            Ok(d) => Verdict::Pass(d),
            Err(d) => Verdict::Fail(d),
        };
        report(i + 1, name, v);
    }
    let live = c11_live().unwrap_or_else(Verdict::Fail);
    report(11, "live smoke test", live);
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
