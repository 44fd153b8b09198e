use std::collections::BTreeMap;
use std::path::Path;

use lint_core::fixtures::{self, FixtureError, NamedProgram};
use lint_core::metrics::{MetricEngine, OpponentSet};
use lint_core::microlang::Program;
use lint_core::obfuscate::{obfuscate, ObfuscateError, ObfuscationLevel};
use lint_core::sim::{SimError, StatsTable};
use lint_llm::pipeline::{kshot_report, kshot_samples, lint_score_with, LintBatch, LintOptions, LintSummary, Metric, PipelineError, Scores};
use lint_llm::{map_description, LlmProvider, PromptBundle, Track};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Baseline, ConfigError, ExperimentConfig};
use crate::report::{write_report, SummaryTable};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Provider(#[from] lint_llm::config::ConfigError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Obfuscate(#[from] ObfuscateError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    /// Setup problems (bad config, missing files) as opposed to run failures.
    pub fn is_config(&self) -> bool {
        matches!(self, ExperimentError::Config(_) | ExperimentError::Fixture(_) | ExperimentError::Provider(_))
    }
}

/// Everything an experiment reads before running.
pub struct Inputs {
    pub programs: Vec<NamedProgram>,
    pub set: OpponentSet,
    pub rand_other_pool: Vec<NamedProgram>,
    pub bundle: PromptBundle,
    pub map_description: String,
}

pub fn load_programs(dir: Option<&Path>, bundled: fn() -> Vec<NamedProgram>) -> Result<Vec<NamedProgram>, FixtureError> {
    match dir {
        Some(d) => fixtures::load_dir(d),
        None => Ok(bundled()),
    }
}

pub fn opponent_set(cfg: &ExperimentConfig) -> Result<OpponentSet, FixtureError> {
    let opponents = load_programs(cfg.opponents.as_deref(), fixtures::opponents)?;
    let map = fixtures::load_map(&cfg.map, StatsTable::default())?;
    let name = Path::new(&cfg.map)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(&cfg.map)
        .to_string();
    Ok(OpponentSet::new(opponents, name, map, cfg.match_options))
}

pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Inputs, ExperimentError> {
    cfg.validate()?;
    let programs = load_programs(cfg.programs.as_deref(), fixtures::policies)?;
    if programs.is_empty() {
        return Err(ConfigError::Invalid("program set is empty".into()).into());
    }
    let set = opponent_set(cfg)?;
    let rand_other_pool = load_programs(cfg.rand_other_pool.as_deref(), fixtures::pool_8x8)?;
    let bundle = match &cfg.prompts {
        Some(d) => PromptBundle::from_dir(d, Track::Microrts)?,
        None => PromptBundle::microrts(),
    };
    let map_description = cfg
        .map_description
        .clone()
        .or_else(|| map_description(&set.map_name).map(str::to_string))
        .unwrap_or_else(|| format!("A {} by {} map.", set.map.width, set.map.height));
    Ok(Inputs {
        programs,
        set,
        rand_other_pool,
        bundle,
        map_description,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramScore {
    pub program_id: String,
    /// Name of the program π was compared with, when there is a single one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub against: Option<String>,
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub baseline: Baseline,
    pub per_program: Vec<ProgramScore>,
}

/// The byte-stable part of a run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub map: String,
    pub programs: usize,
    pub opponents: usize,
    pub seed: u64,
    pub table: SummaryTable,
    pub obfuscation: SummaryTable,
    pub lint: BTreeMap<String, LintSummary>,
    pub baselines: Vec<BaselineResult>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub summary: ExperimentSummary,
    pub runs: BTreeMap<String, LintBatch>,
}

impl ExperimentResult {
    /// No program of the original condition produced a score.
    pub fn all_failed(&self) -> bool {
        self.runs
            .get(ORIGINAL)
            .is_none_or(|b| b.summary.scored + b.summary.verifier_exhausted == 0)
    }

    pub fn errored(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (cond, b) in &self.runs {
            v.extend(b.summary.errored.iter().map(|p| format!("{cond}/{p}")));
        }
        v
    }
}

pub const ORIGINAL: &str = "original";

pub fn condition_name(level: ObfuscationLevel) -> String {
    format!("level-{}", level.number())
}

fn condition_label(cond: &str) -> String {
    match cond {
        ORIGINAL => "Original".into(),
        other => other.replace("level-", "Level "),
    }
}

fn others(programs: &[NamedProgram], i: usize) -> Vec<&NamedProgram> {
    programs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p).collect()
}

/// Uniform draw of an index in `0..n` other than `skip`.
fn draw_other(rng: &mut ChaCha8Rng, n: usize, skip: usize) -> usize {
    let j = rng.gen_range(0..n - 1);
    if j >= skip {
        j + 1
    } else {
        j
    }
}

fn mean_features(engine: &MetricEngine, p: &Program, set: &OpponentSet) -> Result<[f64; 7], SimError> {
    let recs = engine.records(p, set)?;
    let mut m = [0.0; 7];
    for r in &recs {
        for (acc, v) in m.iter_mut().zip(r.features.as_f64()) {
            *acc += v / recs.len().max(1) as f64;
        }
    }
    Ok(m)
}

/// Per-program comparison targets of one baseline, without scoring.
pub fn baseline_targets(
    baseline: Baseline,
    inputs: &Inputs,
    seed: u64,
    engine: &MetricEngine,
) -> Result<Vec<Option<NamedProgram>>, ExperimentError> {
    let ps = &inputs.programs;
    let n = ps.len();
    Ok(match baseline {
        Baseline::Rand => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|i| (n > 1).then(|| ps[draw_other(&mut rng, n, i)].clone())).collect()
        }
        Baseline::RandOther => {
            let pool = &inputs.rand_other_pool;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            (0..n)
                .map(|_| (!pool.is_empty()).then(|| pool[rng.gen_range(0..pool.len())].clone()))
                .collect()
        }
        Baseline::ClosestSyntax => (0..n)
            .map(|i| {
                let pool: Vec<Program> = others(ps, i).into_iter().map(|p| p.program.clone()).collect();
                lint_core::metrics::closest_syntax(&ps[i].program, &pool)
                    .ok()
                    .map(|j| others(ps, i)[j].clone())
            })
            .collect(),
        Baseline::ClosestFeature => {
            let means: Vec<[f64; 7]> = ps
                .par_iter()
                .map(|p| mean_features(engine, &p.program, &inputs.set))
                .collect::<Result<_, _>>()?;
            (0..n)
                .map(|i| {
                    let mut best: Option<(usize, f64)> = None;
                    for j in (0..n).filter(|&j| j != i) {
                        let d = means[i].iter().zip(&means[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                        if best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((j, d));
                        }
                    }
                    best.map(|(j, _)| ps[j].clone())
                })
                .collect()
        }
        Baseline::KShot => vec![None; n],
    })
}

pub fn run_baseline(
    baseline: Baseline,
    inputs: &Inputs,
    cfg: &ExperimentConfig,
    provider: &dyn LlmProvider,
    engine: &MetricEngine,
) -> Result<BaselineResult, ExperimentError> {
    let ps = &inputs.programs;
    let per_program: Vec<ProgramScore> = if baseline == Baseline::KShot {
        let samples = kshot_samples(&inputs.map_description, &inputs.bundle, provider, cfg.k);
        ps.par_iter()
            .map(|p| {
                let r = kshot_report(&p.program, &samples, &inputs.set, engine)?;
                Ok(ProgramScore {
                    program_id: p.name.clone(),
                    against: None,
                    scores: r.scores,
                })
            })
            .collect::<Result<_, PipelineError>>()?
    } else {
        let targets = baseline_targets(baseline, inputs, cfg.seed, engine)?;
        ps.par_iter()
            .zip(targets.par_iter())
            .filter_map(|(p, t)| t.as_ref().map(|t| (p, t)))
            .map(|(p, t)| {
                let r = engine.report(&p.program, &t.program, &inputs.set)?;
                Ok(ProgramScore {
                    program_id: p.name.clone(),
                    against: Some(t.name.clone()),
                    scores: Scores::from_report(&r),
                })
            })
            .collect::<Result<_, SimError>>()?
    };
    Ok(BaselineResult { baseline, per_program })
}

fn column(scores: &[Scores], metrics: &[Metric]) -> Vec<Vec<f64>> {
    metrics.iter().map(|m| scores.iter().map(|s| s.get(*m)).collect()).collect()
}

pub fn lint_options(cfg: &ExperimentConfig) -> LintOptions {
    LintOptions {
        k: cfg.k,
        max_retries: cfg.max_retries,
        aggregation: cfg.aggregation,
        granularity: cfg.granularity,
        workers: cfg.workers,
    }
}

/// Runs LINT on the original programs and each obfuscation level, then every
/// enabled baseline. Programs whose provider calls fail are reported, not fatal.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    let inputs = load_inputs(cfg)?;
    let provider = cfg.provider.build()?;
    run_with(cfg, &inputs, provider.as_ref())
}

pub fn run_with(cfg: &ExperimentConfig, inputs: &Inputs, provider: &dyn LlmProvider) -> Result<ExperimentResult, ExperimentError> {
    let engine = MetricEngine::new(cfg.granularity);
    let opts = lint_options(cfg);
    let mut runs = BTreeMap::new();
    runs.insert(
        ORIGINAL.to_string(),
        lint_score_with(&inputs.programs, &inputs.set, &inputs.bundle, provider, &opts, &engine)?,
    );
    let mut levels: Vec<ObfuscationLevel> = cfg.obfuscation_levels.iter().filter_map(|n| ObfuscationLevel::from_number(*n)).collect();
    levels.sort();
    levels.dedup();
    for level in &levels {
        let obf: Vec<NamedProgram> = inputs
            .programs
            .iter()
            .map(|p| Ok(NamedProgram::new(p.name.clone(), obfuscate(&p.program, *level)?)))
            .collect::<Result<_, ObfuscateError>>()?;
        runs.insert(
            condition_name(*level),
            lint_score_with(&obf, &inputs.set, &inputs.bundle, provider, &opts, &engine)?,
        );
    }

    let metrics = cfg.metrics.clone();
    let mut table = SummaryTable::new("Behavior metrics", metrics.clone());
    table.push("LINT", &column(&runs[ORIGINAL].per_program(), &metrics));
    let mut baselines = Vec::new();
    let mut enabled = cfg.baselines.clone();
    enabled.sort();
    enabled.dedup();
    for b in enabled {
        let r = run_baseline(b, inputs, cfg, provider, &engine)?;
        let scores: Vec<Scores> = r.per_program.iter().map(|p| p.scores).collect();
        table.push(b.label(), &column(&scores, &metrics));
        baselines.push(r);
    }
    let mut obfuscation = SummaryTable::new("Obfuscation", metrics.clone());
    for (cond, batch) in std::iter::once((ORIGINAL.to_string(), &runs[ORIGINAL])).chain(levels.iter().map(|l| (condition_name(*l), &runs[&condition_name(*l)]))) {
        obfuscation.push(condition_label(&cond), &column(&batch.per_program(), &metrics));
    }
    Ok(ExperimentResult {
        summary: ExperimentSummary {
            map: inputs.set.map_name.clone(),
            programs: inputs.programs.len(),
            opponents: inputs.set.len(),
            seed: cfg.seed,
            table,
            obfuscation,
            lint: runs.iter().map(|(k, v)| (k.clone(), v.summary.clone())).collect(),
            baselines,
        },
        runs,
    })
}

pub const SUMMARY_JSON: &str = "summary.json";

/// `summary.json`, the rendered tables, and one JSON file per program run under
/// `runs/<condition>/` together with `runs/<condition>/batch.json`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(&result.summary).expect("summary serializes");
    std::fs::write(dir.join(SUMMARY_JSON), json + "\n")?;
    write_report(&[result.summary.table.clone(), result.summary.obfuscation.clone()], dir)?;
    for (cond, batch) in &result.runs {
        write_batch(batch, &dir.join("runs").join(cond))?;
    }
    Ok(())
}

pub fn write_batch(batch: &LintBatch, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for run in &batch.runs {
        let json = serde_json::to_string_pretty(run).expect("run serializes");
        std::fs::write(dir.join(format!("{}.json", run.program_id)), json + "\n")?;
    }
    let json = serde_json::to_string_pretty(&batch.summary).expect("summary serializes");
    std::fs::write(dir.join("batch.json"), json + "\n")
}

pub fn read_summary(path: &Path) -> std::io::Result<ExperimentSummary> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draw_other_never_returns_skip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..6 {
            for skip in 0..n {
                for _ in 0..50 {
                    let j = draw_other(&mut rng, n, skip);
                    assert!(j < n && j != skip);
                }
            }
        }
    }

    #[test]
    fn labels() {
        assert_eq!(condition_label(ORIGINAL), "Original");
        assert_eq!(condition_label(&condition_name(ObfuscationLevel::Two)), "Level 2");
    }
}
