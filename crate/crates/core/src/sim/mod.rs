//! Deterministic grid simulator that executes Microlanguage policies for two players.

mod eval;
mod game;
mod state;
mod stats;
mod step;

pub(crate) use eval::evaluate_unchecked;
pub use eval::{evaluate_policy, evaluate_with, EvalOptions};
pub use game::{feature_vector, opening_state, play_match, play_match_with, DecisionEntry, FeatureVector, MatchOptions, MatchRecord};
pub use state::{
    same_effects, Activity, AssignedAction, CommandKind, Effect, GameState, JointAssignment, MapCell, MapFile, Player,
    Pos, Unit, UnitKind,
};
pub use stats::{StatsTable, UnitStats};
pub use step::step;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("illegal program: {0}")]
    IllegalProgram(String),
    #[error("invalid map: {0}")]
    Map(String),
    #[error("inconsistent state: {0}")]
    InconsistentState(String),
}
