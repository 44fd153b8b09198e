//! Random grammar-conformant programs, used by fuzzing and property tests.

use rand::seq::SliceRandom;
use rand::Rng;

use super::ast::*;

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_depth: usize,
    pub max_block: usize,
    pub loop_weight: u32,
    pub if_weight: u32,
    pub command_weight: u32,
    /// Whether `attack_if_in_range`, which is outside the grammar, may be drawn.
    pub allow_alias: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 3,
            max_block: 4,
            loop_weight: 2,
            if_weight: 2,
            command_weight: 6,
            allow_alias: true,
        }
    }
}

pub fn random_program<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> Program {
    let n = rng.gen_range(0..=cfg.max_block);
    Program::new((0..n).map(|_| random_statement(rng, cfg, 0, true)).collect())
}

/// Policies shaped like synthesized ones: one or two top-level loops of commands.
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> Program {
    let loops = rng.gen_range(1..=2);
    let statements = (0..loops)
        .map(|_| {
            let n = rng.gen_range(1..=cfg.max_block.max(1));
            Statement::for_each((0..n).map(|_| random_statement(rng, cfg, 1, false)).collect())
        })
        .collect();
    Program::new(statements)
}

fn random_block<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig, depth: usize, allow_empty: bool) -> Vec<Statement> {
    let n = rng.gen_range(0..=cfg.max_block);
    (0..n)
        .map(|_| random_statement(rng, cfg, depth + 1, allow_empty))
        .collect()
}

fn random_statement<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &GenConfig,
    depth: usize,
    allow_empty: bool,
) -> Statement {
    let nested = if depth < cfg.max_depth {
        cfg.loop_weight + cfg.if_weight
    } else {
        0
    };
    let empty_w = u32::from(allow_empty);
    let roll = rng.gen_range(0..nested + cfg.command_weight + empty_w);
    if roll < nested {
        if roll < cfg.loop_weight {
            Statement::For {
                body: random_block(rng, cfg, depth, allow_empty),
            }
        } else if rng.gen_bool(0.5) {
            Statement::If {
                cond: random_bool(rng),
                then: random_block(rng, cfg, depth, allow_empty),
            }
        } else {
            Statement::IfElse {
                cond: random_bool(rng),
                then: random_block(rng, cfg, depth, allow_empty),
                otherwise: random_block(rng, cfg, depth, allow_empty),
            }
        }
    } else if roll < nested + cfg.command_weight {
        Statement::Command {
            command: random_command(rng, cfg.allow_alias),
        }
    } else {
        Statement::Empty
    }
}

fn pick<T: Copy, R: Rng + ?Sized>(rng: &mut R, items: &[T]) -> T {
    *items.choose(rng).expect("non-empty domain")
}

fn count<R: Rng + ?Sized>(rng: &mut R) -> u32 {
    pick(rng, &COUNT_VALUES)
}

pub fn random_bool<R: Rng + ?Sized>(rng: &mut R) -> BoolExpr {
    match rng.gen_range(0..14) {
        0 => BoolExpr::HasNumberOfUnits(pick(rng, &UnitType::ALL), count(rng)),
        1 => BoolExpr::OpponentHasNumberOfUnits(pick(rng, &UnitType::ALL), count(rng)),
        2 => BoolExpr::HasLessNumberOfUnits(pick(rng, &UnitType::ALL), count(rng)),
        3 => BoolExpr::HaveQtdUnitsAttacking(count(rng)),
        4 => BoolExpr::HasUnitWithinDistanceFromOpponent(count(rng)),
        5 => BoolExpr::HasNumberOfWorkersHarvesting(count(rng)),
        6 => BoolExpr::IsType(pick(rng, &UnitType::ALL)),
        7 => BoolExpr::IsBuilder,
        8 => BoolExpr::CanAttack,
        9 => BoolExpr::HasUnitThatKillsInOneAttack,
        10 => BoolExpr::OpponentHasUnitThatKillsUnitInOneAttack,
        11 => BoolExpr::HasUnitInOpponentRange,
        12 => BoolExpr::OpponentHasUnitInPlayerRange,
        _ => BoolExpr::CanHarvest,
    }
}

pub fn random_command<R: Rng + ?Sized>(rng: &mut R, allow_alias: bool) -> Command {
    match rng.gen_range(0..if allow_alias { 8 } else { 7 }) {
        0 => Command::Build(
            pick(rng, &[UnitType::Base, UnitType::Barracks]),
            pick(rng, &Direction::ALL),
            count(rng),
        ),
        1 => Command::Train(pick(rng, &UnitType::ALL), pick(rng, &Direction::ALL), count(rng)),
        2 => Command::MoveToUnit(pick(rng, &TargetPlayer::ALL), pick(rng, &Criterion::ALL)),
        3 => Command::Attack(pick(rng, &Criterion::ALL)),
        4 => Command::Harvest(count(rng)),
        5 => Command::Idle,
        6 => Command::MoveAway,
        _ => Command::AttackIfInRange,
    }
}
