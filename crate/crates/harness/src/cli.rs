use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lint_core::fixtures::{self, NamedProgram};
use lint_core::metrics::{ActionGranularity, IoSuite, MetricEngine, ExecSpec};
use lint_core::microlang::{parse, print, Program};
use lint_core::obfuscate::{obfuscate, verify_neutral, ObfuscationLevel};
use lint_core::sim::play_match;
use lint_llm::pipeline::lint_score_with;
use lint_llm::{Aggregation, MockKind, ProviderKind};

use crate::config::{Baseline, ExperimentConfig};
use crate::experiment::{self, load_inputs, opponent_set, read_summary, run_baseline, run_experiment, write_batch, write_outputs, ExperimentError};
use crate::report::{render_markdown, write_report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lint", version, about = "Interpretability scoring for programmatic policies")]
pub struct Cli {
    /// Experiment config (TOML); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; single-result commands also save their JSON there.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `mock`, `http` or `replay`.
    #[arg(long, global = true, value_parser = parse_kind)]
    pub provider: Option<ProviderKind>,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_kind(s: &str) -> Result<ProviderKind, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MockArg {
    Echo,
    Empty,
    LineDrop,
}

impl From<MockArg> for MockKind {
    fn from(m: MockArg) -> Self {
        match m {
            MockArg::Echo => MockKind::Echo,
            MockArg::Empty => MockKind::Empty,
            MockArg::LineDrop => MockKind::LineDrop,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GranularityArg {
    JointState,
    PerUnit,
}

impl From<GranularityArg> for ActionGranularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::JointState => ActionGranularity::JointState,
            GranularityArg::PerUnit => ActionGranularity::PerUnit,
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct SetArgs {
    /// Opponent directory; bundled opponents when unset.
    #[arg(long)]
    pub opponents: Option<PathBuf>,
    /// Bundled map name or map JSON path.
    #[arg(long)]
    pub map: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct ScoreArgs {
    /// Program directory; bundled policies when unset.
    #[arg(long)]
    pub programs: Option<PathBuf>,
    #[command(flatten)]
    pub set: SetArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub max_retries: Option<usize>,
    #[arg(long, value_enum)]
    pub mock: Option<MockArg>,
    /// Line-drop probability for the line-drop mock.
    #[arg(long)]
    pub q: Option<f64>,
    /// Record responses here (http, mock) or replay from here (replay).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Aggregate every metric with min, including the feature distance.
    #[arg(long)]
    pub literal_min: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a program and print its canonical form (or its AST as JSON).
    Parse {
        /// `.mrl` source, or a `.json` AST written by `parse --json`.
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Play one match and print the match record as JSON.
    Simulate {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        opponent: PathBuf,
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        max_ticks: Option<u32>,
    },
    /// Behavior metrics of two programs against the opponent set.
    Metric {
        #[arg(long)]
        pi: PathBuf,
        #[arg(long)]
        pi2: PathBuf,
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_enum)]
        granularity: Option<GranularityArg>,
    },
    /// Fraction of suite inputs on which two executables print the same output.
    IoMetric {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        /// Directory holding `suite.json`.
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
    },
    /// Insert behavior-neutral garbage code.
    Obfuscate {
        file: PathBuf,
        #[arg(long)]
        level: u8,
        /// Also check neutrality against the opponent set; the report goes to stderr.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        set: SetArgs,
    },
    /// LINT scores of a program directory.
    Score(ScoreArgs),
    /// Scores of one baseline.
    Baseline {
        #[arg(long)]
        kind: Baseline,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// Run the configured experiment and write the report, or re-render a
    /// previous `summary.json` with `--from`.
    Report {
        #[arg(long)]
        from: Option<PathBuf>,
        #[command(flatten)]
        score: ScoreArgs,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Failure(String),
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Failure(e.to_string())
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

fn base_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(config_err)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(k) = cli.provider {
        cfg.provider.kind = k;
    }
    Ok(cfg)
}

fn apply_set(cfg: &mut ExperimentConfig, a: &SetArgs) {
    if let Some(o) = &a.opponents {
        cfg.opponents = Some(o.clone());
    }
    if let Some(m) = &a.map {
        cfg.map = m.clone();
    }
}

fn apply_score(cfg: &mut ExperimentConfig, a: &ScoreArgs) {
    if let Some(p) = &a.programs {
        cfg.programs = Some(p.clone());
    }
    apply_set(cfg, &a.set);
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(r) = a.max_retries {
        cfg.max_retries = r;
    }
    if let Some(m) = a.mock {
        cfg.provider.mock = m.into();
    }
    if let Some(q) = a.q {
        cfg.provider.q = q;
    }
    if let Some(c) = &a.cache {
        cfg.provider.cache_dir = Some(c.clone());
    }
    if a.literal_min {
        cfg.aggregation = Aggregation::LiteralMin;
    }
}

fn read_program(path: &Path) -> Result<Program, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|x| x == "json") {
        let p: Program = serde_json::from_str(&text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
        p.validate().map_err(|e| fail(format!("{}: {e}", path.display())))?;
        return Ok(p);
    }
    parse(&text).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>, name: &str) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(fail)?;
        std::fs::write(dir.join(name), &text).map_err(fail)?;
    }
    std::io::stdout().write_all(text.as_bytes()).map_err(fail)
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Parse { file, json } => {
            let p = read_program(file)?;
            if *json {
                emit_json(&p, cli.out.as_deref(), "program.json")?;
            } else {
                print!("{}", print(&p));
            }
            Ok(EXIT_OK)
        }
        Command::Simulate {
            program,
            opponent,
            map,
            max_ticks,
        } => {
            let mut cfg = base_config(cli)?;
            if let Some(m) = map {
                cfg.map = m.clone();
            }
            let p = read_program(program)?;
            let o = read_program(opponent)?;
            let state = fixtures::load_map(&cfg.map, Default::default()).map_err(config_err)?;
            let mut opts = cfg.match_options;
            if let Some(t) = max_ticks {
                opts.max_ticks = *t;
            }
            if let Some(s) = cli.seed {
                opts.seed = s;
            }
            let rec = play_match(&p, &o, &state, &opts).map_err(fail)?;
            emit_json(&rec, cli.out.as_deref(), "match.json")?;
            Ok(EXIT_OK)
        }
        Command::Metric { pi, pi2, set, granularity } => {
            let mut cfg = base_config(cli)?;
            apply_set(&mut cfg, set);
            let s = opponent_set(&cfg).map_err(config_err)?;
            let g = granularity.map(Into::into).unwrap_or(cfg.granularity);
            let r = MetricEngine::new(g)
                .report(&read_program(pi)?, &read_program(pi2)?, &s)
                .map_err(fail)?;
            emit_json(&r, cli.out.as_deref(), "metric.json")?;
            Ok(EXIT_OK)
        }
        Command::IoMetric {
            reference,
            candidate,
            suite,
            timeout_ms,
        } => {
            let s = IoSuite::load(suite).map_err(config_err)?;
            let r = lint_core::metrics::io_metric(
                &ExecSpec::new(reference),
                &ExecSpec::new(candidate),
                &s,
                Duration::from_millis(*timeout_ms),
            )
            .map_err(fail)?;
            emit_json(&r, cli.out.as_deref(), "io-metric.json")?;
            Ok(EXIT_OK)
        }
        Command::Obfuscate { file, level, verify, set } => {
            let lv = ObfuscationLevel::from_number(*level).ok_or_else(|| config_err(format!("level must be 1 or 2, got {level}")))?;
            let p = read_program(file)?;
            let q = obfuscate(&p, lv).map_err(fail)?;
            let text = print(&q);
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir).map_err(fail)?;
                let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("program");
                std::fs::write(dir.join(format!("{stem}.L{level}.mrl")), &text).map_err(fail)?;
            }
            print!("{text}");
            if *verify {
                let mut cfg = base_config(cli)?;
                apply_set(&mut cfg, set);
                let s = opponent_set(&cfg).map_err(config_err)?;
                let r = verify_neutral(&p, &q, &s).map_err(fail)?;
                eprintln!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
                if !r.neutral {
                    return Ok(EXIT_FAILURE);
                }
            }
            Ok(EXIT_OK)
        }
        Command::Score(a) => {
            let mut cfg = base_config(cli)?;
            apply_score(&mut cfg, a);
            let inputs = load_inputs(&cfg)?;
            let provider = cfg.provider.build().map_err(config_err)?;
            let engine = MetricEngine::new(cfg.granularity);
            let batch = lint_score_with(&inputs.programs, &inputs.set, &inputs.bundle, provider.as_ref(), &experiment::lint_options(&cfg), &engine)
                .map_err(fail)?;
            write_batch(&batch, &cfg.out).map_err(fail)?;
            emit_json(&batch.summary, None, "")?;
            for id in &batch.summary.errored {
                eprintln!("errored: {id}");
            }
            Ok(if batch.summary.scored + batch.summary.verifier_exhausted == 0 { EXIT_FAILURE } else { EXIT_OK })
        }
        Command::Baseline { kind, score } => {
            let mut cfg = base_config(cli)?;
            apply_score(&mut cfg, score);
            let inputs = load_inputs(&cfg)?;
            let provider = cfg.provider.build().map_err(config_err)?;
            let engine = MetricEngine::new(cfg.granularity);
            let r = run_baseline(*kind, &inputs, &cfg, provider.as_ref(), &engine)?;
            let name = format!("baseline-{}.json", serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default());
            emit_json(&r, cli.out.as_deref(), &name)?;
            Ok(if r.per_program.is_empty() { EXIT_FAILURE } else { EXIT_OK })
        }
        Command::Report { from, score } => {
            if let Some(path) = from {
                let s = read_summary(path).map_err(config_err)?;
                let tables = [s.table, s.obfuscation];
                if let Some(dir) = &cli.out {
                    write_report(&tables, dir).map_err(fail)?;
                }
                print!("{}", render_markdown(&tables));
                return Ok(EXIT_OK);
            }
            let mut cfg = base_config(cli)?;
            apply_score(&mut cfg, score);
            let result = run_experiment(&cfg)?;
            write_outputs(&result, &cfg.out).map_err(fail)?;
            print!("{}", render_markdown(&[result.summary.table.clone(), result.summary.obfuscation.clone()]));
            for id in result.errored() {
                eprintln!("errored: {id}");
            }
            Ok(if result.all_failed() { EXIT_FAILURE } else { EXIT_OK })
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(CliError::Config(m)) => {
            eprintln!("error: {m}");
            EXIT_CONFIG
        }
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            EXIT_FAILURE
        }
    }
}

/// Named programs of a directory, for tests and scripts.
pub fn programs_in(dir: &Path) -> Result<Vec<NamedProgram>, String> {
    fixtures::load_dir(dir).map_err(|e| e.to_string())
}
