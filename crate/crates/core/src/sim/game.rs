use serde::{Deserialize, Serialize};

use super::eval::{evaluate_unchecked, EvalOptions};
use super::state::{GameState, JointAssignment, Player};
use super::stats::StatsTable;
use super::step::step;
use super::SimError;
use crate::microlang::Program;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchOptions {
    pub max_ticks: u32,
    pub decision_period: u32,
    pub seed: u64,
    /// Re-run nested loops every time they are reached instead of once.
    pub naive_loops: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            max_ticks: 2000,
            decision_period: 1,
            seed: 0,
            naive_loops: false,
        }
    }
}

impl MatchOptions {
    fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            memoize_loops: !self.naive_loops,
        }
    }
}

/// Seven counts: Worker, Light, Heavy, Ranged, Base, Barracks spawned, then resources collected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector(pub [u32; 7]);

impl FeatureVector {
    pub fn as_f64(&self) -> [f64; 7] {
        self.0.map(f64::from)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub tick: u32,
    /// FNV-1a digest of the state, as 16 hex digits.
    pub digest: String,
    pub assignment: JointAssignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    /// 1 win, 0 draw, -1 loss for the evaluated player.
    pub outcome: i8,
    pub decision_log: Vec<DecisionEntry>,
    pub features: FeatureVector,
    pub ticks_played: u32,
}

pub fn feature_vector(m: &MatchRecord) -> FeatureVector {
    m.features
}

/// Plays `p` (as player 0) against `o` (player 1) from the opening state `map`.
pub fn play_match(p: &Program, o: &Program, map: &GameState, opts: &MatchOptions) -> Result<MatchRecord, SimError> {
    play_match_with(p, o, map, opts, &mut |_, _| {})
}

/// Like [`play_match`], calling `observe` at every decision state of `p` with the
/// assignment `p` chose there.
pub fn play_match_with(
    p: &Program,
    o: &Program,
    map: &GameState,
    opts: &MatchOptions,
    observe: &mut dyn FnMut(&GameState, &JointAssignment),
) -> Result<MatchRecord, SimError> {
    for prog in [p, o] {
        prog.validate().map_err(|e| SimError::IllegalProgram(e.to_string()))?;
    }
    map.check_consistency()?;
    let eval = opts.eval_options();
    let period = opts.decision_period.max(1);
    let mut state = map.clone();
    state.seed = opts.seed;
    state.tick = 0;
    let mut log = Vec::new();
    let mut current: [JointAssignment; 2] = Default::default();
    for _ in 0..opts.max_ticks {
        if !state.has_units(Player::P0) || !state.has_units(Player::P1) {
            break;
        }
        if state.tick % period == 0 {
            let a0 = evaluate_unchecked(p, &state, Player::P0, eval);
            let a1 = evaluate_unchecked(o, &state, Player::P1, eval);
            observe(&state, &a0);
            log.push(DecisionEntry {
                tick: state.tick,
                digest: format!("{:016x}", state.digest()),
                assignment: a0.clone(),
            });
            current = [a0, a1];
            state.assignments = current.clone();
        }
        state = step(&state, &current[0], &current[1]);
        state.assignments = current.clone();
    }
    let alive = (state.has_units(Player::P0), state.has_units(Player::P1));
    let outcome = match alive {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    };
    let mut f = [0u32; 7];
    f[..6].copy_from_slice(&state.produced[0]);
    f[6] = state.collected[0];
    Ok(MatchRecord {
        outcome,
        decision_log: log,
        features: FeatureVector(f),
        ticks_played: state.tick,
    })
}

/// Opening state for `map` with the default unit statistics.
pub fn opening_state(map: &super::MapFile) -> Result<GameState, SimError> {
    map.to_state(StatsTable::default(), 0)
}
