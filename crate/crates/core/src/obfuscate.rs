//! Behavior-preserving garbage-snippet insertion.

use serde::{Deserialize, Serialize};

use crate::metrics::{play_all, OpponentSet};
use crate::microlang::{normalized_lines, parse, print, Command, Program, Statement};
use crate::sim::{JointAssignment, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObfuscationLevel {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl ObfuscationLevel {
    pub const ALL: [ObfuscationLevel; 2] = [ObfuscationLevel::One, ObfuscationLevel::Two];

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(ObfuscationLevel::One),
            2 => Some(ObfuscationLevel::Two),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            ObfuscationLevel::One => 1,
            ObfuscationLevel::Two => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ObfuscateError {
    #[error("illegal program: {0}")]
    IllegalProgram(String),
}

// Only Workers harvest and only Workers are builders, so the harvest is dead.
const SNIPPET_1: &str = "
if(u.canHarvest()) then {
    for(Unit u){
        if(u.isBuilder()) then {
        } else {
            u.harvest(50)
        }
    }
}";

// Workers cannot train, and neither can any unit able to attack.
const SNIPPET_2: &str = "
if(u.is_Type(Worker)) then {
    u.train(Heavy,EnemyDir,10)
}
if(u.canAttack()) then {
    u.train(Ranged,Up,15)
}";

const TRAILING_LOOP: &str = "
for(Unit u){
    u.attack_if_in_range()
}";

const BLOCK_A: &str = "
if(u.canHarvest()) then {
    for(Unit u){
        if(u.isBuilder()) then {
            u.train(Heavy,Left,9)
        } else {
            u.harvest(50)
        }
    }
}";

const BLOCK_B_HEAD: &str = "
for(Unit u){
    if(u.is_Type(Worker)) then {
        u.train(Heavy,EnemyDir,10)
        if(u.canAttack()) then {
            u.train(Ranged,Up,15)
            if(u.canHarvest()) then {
                u.train(Worker,Right,9)
                if(u.isBuilder()) then {
                    if(u.is_Type(Barracks)) then {
                        u.harvest(10)
                        u.train(Worker,Right,2)
                        @DEAD@
                    } else {
                        u.train(Light,Down,5)
                    }
                }
            }
        }
    } else {
        u.harvest(1)
    }
    @LIVE@
}";

const IDLE_LOOP: &str = "for(Unit u){ u.idle() }";

fn snippet(src: &str) -> Vec<Statement> {
    parse(src).expect("snippet parses").statements
}

fn block_b(idle_is_live: bool) -> Vec<Statement> {
    let (dead, live) = if idle_is_live { ("", IDLE_LOOP) } else { (IDLE_LOOP, "") };
    snippet(&BLOCK_B_HEAD.replace("@DEAD@", dead).replace("@LIVE@", live))
}

/// Whether some `idle`/`attack_if_in_range` is reached for every unit, i.e. sits
/// under for-loops only, with no guarding condition.
pub fn has_unconditional_idle(p: &Program) -> bool {
    fn rec(stmts: &[Statement], in_loop: bool) -> bool {
        stmts.iter().any(|s| match s {
            Statement::For { body } => rec(body, true),
            Statement::Command { command } => in_loop && matches!(command, Command::Idle | Command::AttackIfInRange),
            _ => false,
        })
    }
    rec(&p.statements, false)
}

/// Inserts the level's snippets. Guards go first in the first top-level loop (a
/// fresh loop is prepended when there is none); trailing loops go last.
pub fn obfuscate(p: &Program, level: ObfuscationLevel) -> Result<Program, ObfuscateError> {
    p.validate().map_err(|e| ObfuscateError::IllegalProgram(e.to_string()))?;
    let live_idle = has_unconditional_idle(p);
    let mut out = p.clone();
    let first = match out.statements.iter().position(|s| matches!(s, Statement::For { .. })) {
        Some(i) => i,
        None => {
            out.statements.insert(0, Statement::For { body: Vec::new() });
            0
        }
    };
    let (head, tail) = match level {
        ObfuscationLevel::One => {
            let mut head = snippet(SNIPPET_1);
            head.extend(snippet(SNIPPET_2));
            let tail = if live_idle { snippet(TRAILING_LOOP) } else { Vec::new() };
            (head, tail)
        }
        ObfuscationLevel::Two => (snippet(BLOCK_A), block_b(live_idle)),
    };
    if let Statement::For { body } = &mut out.statements[first] {
        body.splice(0..0, head);
    }
    out.statements.extend(tail);
    Ok(out)
}

/// Normalized-line count of `q` minus that of `p`, both in canonical print form.
pub fn line_delta(p: &Program, q: &Program) -> i64 {
    normalized_lines(&print(q)).len() as i64 - normalized_lines(&print(p)).len() as i64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Outcome,
    Features,
    DecisionLog,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub opponent: String,
    pub kind: DivergenceKind,
    /// Position in the decision log of the first differing entry.
    pub index: Option<usize>,
    pub tick: Option<u32>,
    pub digest: Option<String>,
    pub left: Option<JointAssignment>,
    pub right: Option<JointAssignment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeutralityReport {
    pub neutral: bool,
    pub map: String,
    pub opponents_checked: usize,
    pub first_divergence: Option<Divergence>,
}

/// Plays both programs against every opponent and demands identical outcomes,
/// decision logs and features.
pub fn verify_neutral(p: &Program, q: &Program, set: &OpponentSet) -> Result<NeutralityReport, SimError> {
    let a = play_all(p, set)?;
    let b = play_all(q, set)?;
    let mut first = None;
    for ((o, x), y) in set.opponents.iter().zip(&a).zip(&b) {
        let log_diff = x
            .decision_log
            .iter()
            .zip(&y.decision_log)
            .position(|(l, r)| l != r)
            .or_else(|| (x.decision_log.len() != y.decision_log.len()).then(|| x.decision_log.len().min(y.decision_log.len())));
        let div = if let Some(i) = log_diff {
            let l = x.decision_log.get(i);
            let r = y.decision_log.get(i);
            Some(Divergence {
                opponent: o.name.clone(),
                kind: DivergenceKind::DecisionLog,
                index: Some(i),
                tick: l.or(r).map(|e| e.tick),
                digest: l.or(r).map(|e| e.digest.clone()),
                left: l.map(|e| e.assignment.clone()),
                right: r.map(|e| e.assignment.clone()),
            })
        } else if x.outcome != y.outcome {
            Some(Divergence {
                opponent: o.name.clone(),
                kind: DivergenceKind::Outcome,
                index: None,
                tick: None,
                digest: None,
                left: None,
                right: None,
            })
        } else if x.features != y.features {
            Some(Divergence {
                opponent: o.name.clone(),
                kind: DivergenceKind::Features,
                index: None,
                tick: None,
                digest: None,
                left: None,
                right: None,
            })
        } else {
            None
        };
        if div.is_some() {
            first = div;
            break;
        }
    }
    Ok(NeutralityReport {
        neutral: first.is_none(),
        map: set.map_name.clone(),
        opponents_checked: set.len(),
        first_divergence: first,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn level_one_on_tiered() {
        let p = fixtures::tiered();
        let q = obfuscate(&p, ObfuscationLevel::One).unwrap();
        let text = print(&q);
        assert!(text.contains("} else {\n                u.harvest(50)"), "{text}");
        assert_eq!(line_delta(&p, &q), 11);
        assert_eq!(parse(&text).unwrap(), q);
    }

    #[test]
    fn level_two_adds_twenty_three_lines() {
        let p = fixtures::tiered();
        let q = obfuscate(&p, ObfuscationLevel::Two).unwrap();
        assert_eq!(line_delta(&p, &q), 23);
    }

    #[test]
    fn empty_program_gets_one_fresh_loop() {
        let e = Program::default();
        let q = obfuscate(&e, ObfuscationLevel::One).unwrap();
        assert_eq!(q.statements.len(), 1);
        assert_eq!(line_delta(&e, &q), 10);
        let q2 = obfuscate(&e, ObfuscationLevel::Two).unwrap();
        assert_eq!(line_delta(&e, &q2), 24);
    }

    #[test]
    fn unconditional_idle_detection() {
        assert!(has_unconditional_idle(&fixtures::tiered()));
        let guarded = parse("for(Unit u){ if(u.canAttack()) then { u.idle() } }").unwrap();
        assert!(!has_unconditional_idle(&guarded));
        let nested = parse("for(Unit u){ for(Unit u){ u.idle() } }").unwrap();
        assert!(has_unconditional_idle(&nested));
        assert!(!has_unconditional_idle(&parse("u.idle()").unwrap()));
    }

    #[test]
    fn deterministic_output() {
        for p in fixtures::policies() {
            for level in ObfuscationLevel::ALL {
                let a = print(&obfuscate(&p.program, level).unwrap());
                let b = print(&obfuscate(&p.program, level).unwrap());
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn tiered_vs_empty_diverges_at_first_state() {
        let mut set = OpponentSet::bundled(fixtures::MAP_8X8).unwrap();
        set.opponents.truncate(2);
        let r = verify_neutral(&fixtures::tiered(), &Program::default(), &set).unwrap();
        assert!(!r.neutral);
        let d = r.first_divergence.unwrap();
        assert_eq!(d.kind, DivergenceKind::DecisionLog);
        assert_eq!(d.index, Some(0));
    }

    #[test]
    fn self_is_neutral() {
        let mut set = OpponentSet::bundled(fixtures::MAP_8X8).unwrap();
        set.opponents.truncate(2);
        let p = fixtures::tiered();
        assert!(verify_neutral(&p, &p, &set).unwrap().neutral);
    }
}
