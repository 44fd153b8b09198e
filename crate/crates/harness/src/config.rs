use std::path::{Path, PathBuf};

use lint_core::metrics::ActionGranularity;
use lint_core::sim::MatchOptions;
use lint_llm::{Aggregation, Metric, ProviderConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    Rand,
    RandOther,
    ClosestSyntax,
    ClosestFeature,
    KShot,
}

impl Baseline {
    pub const ALL: [Baseline; 5] = [
        Baseline::Rand,
        Baseline::RandOther,
        Baseline::ClosestSyntax,
        Baseline::ClosestFeature,
        Baseline::KShot,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Baseline::Rand => "Rand",
            Baseline::RandOther => "Rand-Other",
            Baseline::ClosestSyntax => "Closest-Syntax",
            Baseline::ClosestFeature => "Closest-Feature",
            Baseline::KShot => "k-Shot",
        }
    }
}

impl std::str::FromStr for Baseline {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.label().eq_ignore_ascii_case(s) || serde_json::to_value(b).ok().and_then(|v| v.as_str().map(|x| x == s)) == Some(true))
            .ok_or_else(|| format!("unknown baseline {s:?}"))
    }
}

/// One experiment. Relative paths are resolved against the directory of the
/// config file by [`ExperimentConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Directory of `.mrl` programs; the bundled policies when unset.
    pub programs: Option<PathBuf>,
    /// Directory of `.mrl` opponents; the bundled opponents when unset.
    pub opponents: Option<PathBuf>,
    /// Bundled map name or path to a map JSON file.
    pub map: String,
    /// Pool drawn from by Rand-Other; the bundled 8x8 pool when unset.
    pub rand_other_pool: Option<PathBuf>,
    /// Directory with replacement prompt templates.
    pub prompts: Option<PathBuf>,
    /// Map text for the k-shot prompt; the bundled description of `map` when unset.
    pub map_description: Option<String>,
    pub provider: ProviderConfig,
    pub k: usize,
    pub max_retries: usize,
    pub aggregation: Aggregation,
    pub granularity: ActionGranularity,
    pub metrics: Vec<Metric>,
    pub baselines: Vec<Baseline>,
    pub obfuscation_levels: Vec<u8>,
    pub out: PathBuf,
    pub seed: u64,
    pub match_options: MatchOptions,
    /// Concurrent programs; 0 picks automatically.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            programs: None,
            opponents: None,
            map: lint_core::fixtures::MAP_16X16.to_string(),
            rand_other_pool: None,
            prompts: None,
            map_description: None,
            provider: ProviderConfig::default(),
            k: lint_llm::pipeline::DEFAULT_K,
            max_retries: lint_llm::pipeline::DEFAULT_MAX_RETRIES,
            aggregation: Aggregation::Conservative,
            granularity: ActionGranularity::JointState,
            metrics: Metric::ALL.to_vec(),
            baselines: Baseline::ALL.to_vec(),
            obfuscation_levels: vec![1, 2],
            out: PathBuf::from("runs"),
            seed: 0,
            match_options: MatchOptions::default(),
            workers: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: String, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|source| ConfigError::Toml {
            path: path.display().to_string(),
            source,
        })?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.programs, &mut self.opponents, &mut self.rand_other_pool, &mut self.prompts, &mut self.provider.cache_dir]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        fix(&mut self.out);
        if !lint_core::fixtures::MAP_NAMES.contains(&self.map.as_str()) && Path::new(&self.map).is_relative() {
            self.map = base.join(&self.map).display().to_string();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::Invalid("k must be >= 1".into()));
        }
        if self.max_retries == 0 {
            return Err(ConfigError::Invalid("max_retries must be >= 1".into()));
        }
        if self.metrics.is_empty() {
            return Err(ConfigError::Invalid("no metrics enabled".into()));
        }
        if let Some(l) = self.obfuscation_levels.iter().find(|l| !matches!(l, 1 | 2)) {
            return Err(ConfigError::Invalid(format!("obfuscation level {l} (expected 1 or 2)")));
        }
        for (name, p) in [("programs", &self.programs), ("opponents", &self.opponents), ("rand_other_pool", &self.rand_other_pool), ("prompts", &self.prompts)] {
            if let Some(p) = p {
                if !p.is_dir() {
                    return Err(ConfigError::Invalid(format!("{name}: {} is not a directory", p.display())));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn partial_file() {
        let c = ExperimentConfig::from_toml(
            r#"
k = 3
seed = 9
baselines = ["rand", "k-shot"]
metrics = ["action"]
aggregation = "literal-min"

[provider]
kind = "mock"
mock = "line-drop"
q = 0.2

[match_options]
max_ticks = 500
"#,
        )
        .unwrap();
        assert_eq!((c.k, c.seed), (3, 9));
        assert_eq!(c.baselines, vec![Baseline::Rand, Baseline::KShot]);
        assert_eq!(c.aggregation, Aggregation::LiteralMin);
        assert_eq!(c.provider.q, 0.2);
        assert_eq!(c.match_options.max_ticks, 500);
        assert_eq!(c.match_options.decision_period, 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("kk = 3").is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("progs")).unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "programs = \"progs\"\nout = \"o\"\n").unwrap();
        let c = ExperimentConfig::load(&path).unwrap();
        assert_eq!(c.programs.as_deref(), Some(dir.path().join("progs").as_path()));
        assert_eq!(c.out, dir.path().join("o"));
        assert_eq!(c.map, lint_core::fixtures::MAP_16X16);
        c.validate().unwrap();
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::default();
        c.obfuscation_levels = vec![3];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.k = 0;
        assert!(c.validate().is_err());
        assert_eq!("Closest-Syntax".parse::<Baseline>().unwrap(), Baseline::ClosestSyntax);
        assert_eq!("rand-other".parse::<Baseline>().unwrap(), Baseline::RandOther);
    }
}
