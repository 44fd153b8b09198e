use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A runnable program: an executable plus fixed leading arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecSpec {
    pub program: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
}

impl ExecSpec {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExecSpec {
            program: program.into(),
            args: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoCase {
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub stdin: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoSuite {
    pub inputs: Vec<IoCase>,
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("input suite is empty")]
    EmptySuite,
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

impl IoSuite {
    pub const FILE: &'static str = "suite.json";

    /// Reads `suite.json` from a suite directory.
    pub fn load(dir: &Path) -> Result<Self, IoError> {
        let path = dir.join(Self::FILE);
        let text = std::fs::read_to_string(&path).map_err(|source| IoError::Read {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| IoError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self).expect("suite serializes");
        std::fs::write(dir.join(Self::FILE), text + "\n")
    }
}

/// Builds a suite of `count` cases from a seeded generator.
pub fn generate_suite(seed: u64, count: usize, mut gen: impl FnMut(&mut ChaCha8Rng, usize) -> IoCase) -> IoSuite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    IoSuite {
        inputs: (0..count).map(|i| gen(&mut rng, i)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Reference,
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecFailure {
    pub case: usize,
    pub side: Side,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoReport {
    pub score: f64,
    pub matched: usize,
    pub total: usize,
    pub failures: Vec<ExecFailure>,
}

fn normalize_output(s: &str) -> String {
    let mut out: Vec<&str> = s.lines().map(str::trim_end).collect();
    while out.last().is_some_and(|l| l.is_empty()) {
        out.pop();
    }
    out.join("\n")
}

fn run(spec: &ExecSpec, case: &IoCase, timeout: Duration) -> Result<String, String> {
    let mut child = Command::new(&spec.program)
        .args(&spec.args)
        .args(&case.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| format!("spawn failed: {e}"))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = case.stdin.clone();
    let writer = thread::spawn(move || {
        // a program that never reads its input closes the pipe early
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });
    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(st)) => break Ok(st),
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                break Err(format!("timed out after {:?}", timeout));
            }
            Ok(None) => thread::sleep(Duration::from_millis(2)),
            Err(e) => break Err(format!("wait failed: {e}")),
        }
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let status = status?;
    if !status.success() {
        return Err(format!("exited with {status}"));
    }
    Ok(normalize_output(&String::from_utf8_lossy(&out)))
}

/// Fraction of suite inputs on which `candidate` prints what `reference` prints.
/// Crashes, non-zero exits and timeouts on either side count as mismatches.
pub fn io_metric(reference: &ExecSpec, candidate: &ExecSpec, suite: &IoSuite, timeout: Duration) -> Result<IoReport, IoError> {
    if suite.inputs.is_empty() {
        return Err(IoError::EmptySuite);
    }
    let mut matched = 0;
    let mut failures = Vec::new();
    for (i, case) in suite.inputs.iter().enumerate() {
        let a = run(reference, case, timeout);
        let b = run(candidate, case, timeout);
        if let Err(reason) = &a {
            failures.push(ExecFailure {
                case: i,
                side: Side::Reference,
                reason: reason.clone(),
            });
        }
        if let Err(reason) = &b {
            failures.push(ExecFailure {
                case: i,
                side: Side::Candidate,
                reason: reason.clone(),
            });
        }
        if let (Ok(x), Ok(y)) = (&a, &b) {
            if x == y {
                matched += 1;
            }
        }
    }
    Ok(IoReport {
        score: matched as f64 / suite.inputs.len() as f64,
        matched,
        total: suite.inputs.len(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str) -> ExecSpec {
        ExecSpec {
            program: "/bin/sh".into(),
            args: vec!["-c".into(), script.into(), "sh".into()],
        }
    }

    fn suite(n: usize) -> IoSuite {
        generate_suite(1, n, |_, i| IoCase {
            args: vec![i.to_string()],
            stdin: String::new(),
        })
    }

    #[test]
    fn self_comparison_is_one() {
        let r = io_metric(&sh("echo $1"), &sh("echo $1   "), &suite(4), Duration::from_secs(5)).unwrap();
        assert_eq!(r.score, 1.0);
        assert!(r.failures.is_empty());
    }

    #[test]
    fn failing_candidate_is_zero_and_recorded() {
        let r = io_metric(&sh("echo $1"), &sh("exit 3"), &suite(3), Duration::from_secs(5)).unwrap();
        assert_eq!(r.score, 0.0);
        assert_eq!(r.failures.len(), 3);
        assert!(r.failures.iter().all(|f| f.side == Side::Candidate));
    }

    #[test]
    fn timeout_counts_as_mismatch() {
        let r = io_metric(&sh("echo $1"), &sh("sleep 5"), &suite(1), Duration::from_millis(100)).unwrap();
        assert_eq!(r.score, 0.0);
        assert!(r.failures[0].reason.contains("timed out"));
    }

    #[test]
    fn stdin_is_forwarded() {
        let s = IoSuite {
            inputs: vec![IoCase {
                args: vec![],
                stdin: "7\n".into(),
            }],
        };
        let r = io_metric(&sh("read x; echo $((x+1))"), &sh("echo 8"), &s, Duration::from_secs(5)).unwrap();
        assert_eq!(r.score, 1.0);
    }

    #[test]
    fn empty_suite_is_rejected() {
        let s = IoSuite { inputs: vec![] };
        assert!(matches!(io_metric(&sh("true"), &sh("true"), &s, Duration::from_secs(1)), Err(IoError::EmptySuite)));
    }

    #[test]
    fn suite_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let s = suite(5);
        s.save(dir.path()).unwrap();
        assert_eq!(IoSuite::load(dir.path()).unwrap(), s);
    }
}
