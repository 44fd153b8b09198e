use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Track {
    Microrts,
    CProblems,
}

const MICRORTS_EXPLAINER: &str = include_str!("../prompts/microrts/explainer.txt");
const MICRORTS_RECONSTRUCTOR: &str = include_str!("../prompts/microrts/reconstructor.txt");
const MICRORTS_VERIFIER: &str = include_str!("../prompts/microrts/verifier.txt");
const MICRORTS_KSHOT: &str = include_str!("../prompts/microrts/kshot.txt");
const MICRORTS_DSL: &str = include_str!("../prompts/microrts/dsl_description.txt");
const C_EXPLAINER: &str = include_str!("../prompts/c/explainer.txt");
const C_RECONSTRUCTOR: &str = include_str!("../prompts/c/reconstructor.txt");
const C_VERIFIER: &str = include_str!("../prompts/c/verifier.txt");
const CONSTRAINTS: &str = include_str!("../prompts/constraints.txt");

const MAPS: [(&str, &str); 2] = [
    ("BaseWorkers-16x16A", include_str!("../prompts/maps/BaseWorkers-16x16A.txt")),
    ("BaseWorkers-8x8", include_str!("../prompts/maps/BaseWorkers-8x8.txt")),
];

/// Bundled natural-language description of a fixture map, if there is one.
pub fn map_description(name: &str) -> Option<&'static str> {
    MAPS.iter().find(|(n, _)| *n == name).map(|(_, d)| d.trim_end())
}

/// Prompt templates for one track. Placeholders are `{DSL_DESCRIPTION}`,
/// `{PROGRAM}`, `{EXPLANATION}`, `{CONSTRAINTS}` and `{MAP_DESCRIPTION}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub track: Track,
    pub explainer_template: String,
    pub reconstructor_template: String,
    pub verifier_template: String,
    pub kshot_template: String,
    pub dsl_description: String,
    pub constraints: Vec<String>,
}

impl PromptBundle {
    pub fn microrts() -> Self {
        PromptBundle {
            track: Track::Microrts,
            explainer_template: MICRORTS_EXPLAINER.to_string(),
            reconstructor_template: MICRORTS_RECONSTRUCTOR.to_string(),
            verifier_template: MICRORTS_VERIFIER.to_string(),
            kshot_template: MICRORTS_KSHOT.to_string(),
            dsl_description: MICRORTS_DSL.trim_end().to_string(),
            constraints: CONSTRAINTS.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect(),
        }
    }

    pub fn c_problems() -> Self {
        PromptBundle {
            track: Track::CProblems,
            explainer_template: C_EXPLAINER.to_string(),
            reconstructor_template: C_RECONSTRUCTOR.to_string(),
            verifier_template: C_VERIFIER.to_string(),
            kshot_template: String::new(),
            dsl_description: String::new(),
            constraints: Vec::new(),
        }
    }

    pub fn for_track(track: Track) -> Self {
        match track {
            Track::Microrts => Self::microrts(),
            Track::CProblems => Self::c_problems(),
        }
    }

    /// Starts from the bundled templates of `track` and replaces any that exist
    /// in `dir` (`explainer.txt`, `reconstructor.txt`, `verifier.txt`, `kshot.txt`,
    /// `dsl_description.txt`, `constraints.txt`).
    pub fn from_dir(dir: &Path, track: Track) -> std::io::Result<Self> {
        let mut b = Self::for_track(track);
        let read = |name: &str| -> std::io::Result<Option<String>> {
            let p = dir.join(name);
            if p.exists() {
                std::fs::read_to_string(p).map(Some)
            } else {
                Ok(None)
            }
        };
        if let Some(t) = read("explainer.txt")? {
            b.explainer_template = t;
        }
        if let Some(t) = read("reconstructor.txt")? {
            b.reconstructor_template = t;
        }
        if let Some(t) = read("verifier.txt")? {
            b.verifier_template = t;
        }
        if let Some(t) = read("kshot.txt")? {
            b.kshot_template = t;
        }
        if let Some(t) = read("dsl_description.txt")? {
            b.dsl_description = t.trim_end().to_string();
        }
        if let Some(t) = read("constraints.txt")? {
            b.constraints = t.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect();
        }
        Ok(b)
    }

    fn constraint_block(&self) -> String {
        self.constraints
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{}. {}", i + 1, c))
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn fill(&self, template: &str, program: &str, explanation: &str, map: &str) -> String {
        // one pass so that substituted text is never re-scanned for placeholders
        let constraints = self.constraint_block();
        let mut out = String::with_capacity(template.len() + program.len() + explanation.len());
        let mut rest = template;
        while let Some(i) = rest.find('{') {
            out.push_str(&rest[..i]);
            let tail = &rest[i..];
            let value = [
                ("{DSL_DESCRIPTION}", self.dsl_description.as_str()),
                ("{PROGRAM}", program),
                ("{EXPLANATION}", explanation),
                ("{CONSTRAINTS}", constraints.as_str()),
                ("{MAP_DESCRIPTION}", map),
            ]
            .into_iter()
            .find(|(k, _)| tail.starts_with(k));
            match value {
                Some((k, v)) => {
                    out.push_str(v.trim_end());
                    rest = &tail[k.len()..];
                }
                None => {
                    out.push('{');
                    rest = &tail[1..];
                }
            }
        }
        out.push_str(rest);
        out
    }

    pub fn render_explainer(&self, program: &str) -> String {
        self.fill(&self.explainer_template, program, "", "")
    }

    pub fn render_verifier(&self, program: &str, explanation: &str) -> String {
        self.fill(&self.verifier_template, program, explanation, "")
    }

    pub fn render_reconstructor(&self, explanation: &str) -> String {
        self.fill(&self.reconstructor_template, "", explanation, "")
    }

    pub fn render_kshot(&self, map_description: &str) -> String {
        self.fill(&self.kshot_template, "", "", map_description)
    }
}

/// Body of the first `<tag>...</tag>` pair, trimmed. An unclosed tag runs to
/// the end of the text.
pub fn extract_tag(text: &str, tag: &str) -> Option<String> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = text.find(&open)? + open.len();
    let body = match text[start..].find(&close) {
        Some(end) => &text[start..start + end],
        None => &text[start..],
    };
    Some(body.trim().to_string())
}

/// Drops a surrounding Markdown code fence, if present.
pub fn strip_code_fence(text: &str) -> &str {
    let t = text.trim();
    if let Some(rest) = t.strip_prefix("```") {
        let body = rest.split_once('\n').map(|(_, b)| b).unwrap_or("");
        return body.trim_end().strip_suffix("```").unwrap_or(body).trim();
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn microrts_placeholders_are_all_filled() {
        let b = PromptBundle::microrts();
        for s in [
            b.render_explainer("for(Unit u){ u.idle() }"),
            b.render_verifier("for(Unit u){ u.idle() }", "text"),
            b.render_reconstructor("text"),
            b.render_kshot("a map"),
        ] {
            for ph in ["{DSL_DESCRIPTION}", "{PROGRAM}", "{EXPLANATION}", "{CONSTRAINTS}", "{MAP_DESCRIPTION}"] {
                assert!(!s.contains(ph), "{ph} left in prompt");
            }
            assert!(s.contains("<CFG>") && s.contains("</CFG>"));
        }
    }

    #[test]
    fn explainer_carries_constraints_and_program() {
        let b = PromptBundle::microrts();
        assert_eq!(b.constraints.len(), 3);
        let s = b.render_explainer("for(Unit u){ u.harvest(7) }");
        for c in &b.constraints {
            assert!(s.contains(c.as_str()));
        }
        assert!(s.contains("must not use programming language jargon"));
        assert!(s.contains("u.harvest(7)"));
    }

    #[test]
    fn substituted_text_is_not_rescanned() {
        let b = PromptBundle::microrts();
        let s = b.render_reconstructor("look: {PROGRAM}");
        assert!(s.contains("look: {PROGRAM}"));
    }

    #[test]
    fn c_track_has_no_dsl() {
        let b = PromptBundle::c_problems();
        let s = b.render_verifier("int main(){}", "it prints");
        assert!(s.contains("int main(){}") && s.contains("it prints"));
        assert!(!s.contains("CFG"));
        assert!(b.render_explainer("int x;").contains("<explanation></explanation>"));
    }

    #[test]
    fn from_dir_overrides_only_present_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("reconstructor.txt"), "R {EXPLANATION}").unwrap();
        let b = PromptBundle::from_dir(dir.path(), Track::Microrts).unwrap();
        assert_eq!(b.render_reconstructor("e"), "R e");
        assert_eq!(b.explainer_template, PromptBundle::microrts().explainer_template);
    }

    #[test]
    fn tag_extraction() {
        assert_eq!(extract_tag("a <x> b </x> c", "x").as_deref(), Some("b"));
        assert_eq!(extract_tag("<x>open", "x").as_deref(), Some("open"));
        assert_eq!(extract_tag("none", "x"), None);
        assert_eq!(strip_code_fence("```rust\nfor(Unit u){}\n```"), "for(Unit u){}");
        assert_eq!(strip_code_fence("plain"), "plain");
    }

    #[test]
    fn map_descriptions() {
        assert!(map_description("BaseWorkers-16x16A").unwrap().contains("16 by 16"));
        assert!(map_description("nowhere").is_none());
    }
}
