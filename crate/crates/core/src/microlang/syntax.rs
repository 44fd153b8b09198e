use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// The set of normalized, non-empty source lines of a program.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxSet {
    pub lines: BTreeSet<String>,
}

impl SyntaxSet {
    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn intersection_size(&self, other: &SyntaxSet) -> usize {
        self.lines.intersection(&other.lines).count()
    }
}

/// Normalizes one source line: braces and trailing `;` are stripped from both
/// ends, whitespace before `( ) , .` or after `( , .` is removed and other runs
/// collapse to one space. Case is preserved.
pub fn normalize_line(line: &str) -> String {
    let stripped = line.trim_matches(|c: char| c.is_whitespace() || c == '{' || c == '}' || c == ';');
    let mut out = String::with_capacity(stripped.len());
    let mut pending_space = false;
    for c in stripped.chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        let punct = matches!(c, '(' | ')' | ',' | '.');
        let last_punct = matches!(out.chars().last(), Some('(' | ',' | '.'));
        if pending_space && !punct && !last_punct && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.push(c);
    }
    out
}

/// Normalized lines in source order, dropping lines that were only braces or blank.
pub fn normalized_lines(source: &str) -> Vec<String> {
    source
        .lines()
        .map(normalize_line)
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn syntax_set(source: &str) -> SyntaxSet {
    SyntaxSet {
        lines: normalized_lines(source).into_iter().collect(),
    }
}
