use std::fmt;

use serde::{Deserialize, Serialize};

/// Integer arguments admitted by the `N` production.
pub const COUNT_VALUES: [u32; 16] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 25, 50, 100];

pub fn is_valid_count(n: u32) -> bool {
    COUNT_VALUES.contains(&n)
}

/// A Microlanguage policy: an ordered list of top-level statements.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Program {
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statement {
    /// `for(Unit u){ ... }`
    For { body: Vec<Statement> },
    If {
        cond: BoolExpr,
        then: Vec<Statement>,
    },
    IfElse {
        cond: BoolExpr,
        then: Vec<Statement>,
        #[serde(rename = "else")]
        otherwise: Vec<Statement>,
    },
    Command { command: Command },
    /// The explicit empty block `e`.
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitType {
    Base,
    Barracks,
    Ranged,
    Heavy,
    Light,
    Worker,
}

impl UnitType {
    pub const ALL: [UnitType; 6] = [
        UnitType::Base,
        UnitType::Barracks,
        UnitType::Ranged,
        UnitType::Heavy,
        UnitType::Light,
        UnitType::Worker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnitType::Base => "Base",
            UnitType::Barracks => "Barracks",
            UnitType::Ranged => "Ranged",
            UnitType::Heavy => "Heavy",
            UnitType::Light => "Light",
            UnitType::Worker => "Worker",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    EnemyDir,
    Up,
    Down,
    Right,
    Left,
}

impl Direction {
    pub const ALL: [Direction; 5] = [
        Direction::EnemyDir,
        Direction::Up,
        Direction::Down,
        Direction::Right,
        Direction::Left,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Direction::EnemyDir => "EnemyDir",
            Direction::Up => "Up",
            Direction::Down => "Down",
            Direction::Right => "Right",
            Direction::Left => "Left",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }
}

/// Opponent-selection criterion (`O_p`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    Strongest,
    Weakest,
    Closest,
    Farthest,
    LessHealthy,
    MostHealthy,
    Random,
}

impl Criterion {
    pub const ALL: [Criterion; 7] = [
        Criterion::Strongest,
        Criterion::Weakest,
        Criterion::Closest,
        Criterion::Farthest,
        Criterion::LessHealthy,
        Criterion::MostHealthy,
        Criterion::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Strongest => "Strongest",
            Criterion::Weakest => "Weakest",
            Criterion::Closest => "Closest",
            Criterion::Farthest => "Farthest",
            Criterion::LessHealthy => "LessHealthy",
            Criterion::MostHealthy => "MostHealthy",
            Criterion::Random => "Random",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Target player (`T_p`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetPlayer {
    Ally,
    Enemy,
}

impl TargetPlayer {
    pub const ALL: [TargetPlayer; 2] = [TargetPlayer::Ally, TargetPlayer::Enemy];

    pub fn name(self) -> &'static str {
        match self {
            TargetPlayer::Ally => "Ally",
            TargetPlayer::Enemy => "Enemy",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "fn", content = "args", rename_all = "camelCase")]
pub enum BoolExpr {
    HasNumberOfUnits(UnitType, u32),
    OpponentHasNumberOfUnits(UnitType, u32),
    HasLessNumberOfUnits(UnitType, u32),
    HaveQtdUnitsAttacking(u32),
    HasUnitWithinDistanceFromOpponent(u32),
    HasNumberOfWorkersHarvesting(u32),
    #[serde(rename = "is_Type")]
    IsType(UnitType),
    IsBuilder,
    CanAttack,
    HasUnitThatKillsInOneAttack,
    OpponentHasUnitThatKillsUnitInOneAttack,
    HasUnitInOpponentRange,
    OpponentHasUnitInPlayerRange,
    CanHarvest,
}

impl BoolExpr {
    pub fn name(&self) -> &'static str {
        match self {
            BoolExpr::HasNumberOfUnits(..) => "hasNumberOfUnits",
            BoolExpr::OpponentHasNumberOfUnits(..) => "opponentHasNumberOfUnits",
            BoolExpr::HasLessNumberOfUnits(..) => "hasLessNumberOfUnits",
            BoolExpr::HaveQtdUnitsAttacking(_) => "haveQtdUnitsAttacking",
            BoolExpr::HasUnitWithinDistanceFromOpponent(_) => "hasUnitWithinDistanceFromOpponent",
            BoolExpr::HasNumberOfWorkersHarvesting(_) => "hasNumberOfWorkersHarvesting",
            BoolExpr::IsType(_) => "is_Type",
            BoolExpr::IsBuilder => "isBuilder",
            BoolExpr::CanAttack => "canAttack",
            BoolExpr::HasUnitThatKillsInOneAttack => "hasUnitThatKillsInOneAttack",
            BoolExpr::OpponentHasUnitThatKillsUnitInOneAttack => {
                "opponentHasUnitThatKillsUnitInOneAttack"
            }
            BoolExpr::HasUnitInOpponentRange => "hasUnitInOpponentRange",
            BoolExpr::OpponentHasUnitInPlayerRange => "opponentHasUnitInPlayerRange",
            BoolExpr::CanHarvest => "canHarvest",
        }
    }

    fn counts(&self) -> Option<u32> {
        match *self {
            BoolExpr::HasNumberOfUnits(_, n)
            | BoolExpr::OpponentHasNumberOfUnits(_, n)
            | BoolExpr::HasLessNumberOfUnits(_, n)
            | BoolExpr::HaveQtdUnitsAttacking(n)
            | BoolExpr::HasUnitWithinDistanceFromOpponent(n)
            | BoolExpr::HasNumberOfWorkersHarvesting(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "fn", content = "args", rename_all = "camelCase")]
pub enum Command {
    Build(UnitType, Direction, u32),
    Train(UnitType, Direction, u32),
    MoveToUnit(TargetPlayer, Criterion),
    Attack(Criterion),
    Harvest(u32),
    Idle,
    MoveAway,
    /// Alias admitted outside the grammar; attacks only an enemy already in range.
    #[serde(rename = "attack_if_in_range")]
    AttackIfInRange,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Build(..) => "build",
            Command::Train(..) => "train",
            Command::MoveToUnit(..) => "moveToUnit",
            Command::Attack(_) => "attack",
            Command::Harvest(_) => "harvest",
            Command::Idle => "idle",
            Command::MoveAway => "moveAway",
            Command::AttackIfInRange => "attack_if_in_range",
        }
    }

    fn counts(&self) -> Option<u32> {
        match *self {
            Command::Build(_, _, n) | Command::Train(_, _, n) | Command::Harvest(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("{function}: argument {value} is outside N = {{0..10, 15, 20, 25, 50, 100}}")]
    CountOutOfDomain { function: &'static str, value: u32 },
}

impl Program {
    pub fn new(statements: Vec<Statement>) -> Self {
        Program { statements }
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Checks the parts of the grammar the type system does not encode.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut result = Ok(());
        walk(&self.statements, &mut |s| {
            if result.is_err() {
                return;
            }
            let check = match s {
                Statement::Command { command } => command.counts().map(|n| (command.name(), n)),
                Statement::If { cond, .. } | Statement::IfElse { cond, .. } => {
                    cond.counts().map(|n| (cond.name(), n))
                }
                _ => None,
            };
            if let Some((function, value)) = check {
                if !is_valid_count(value) {
                    result = Err(ValidationError::CountOutOfDomain { function, value });
                }
            }
        });
        result
    }

    /// Maximum for-loop nesting depth.
    pub fn nesting_depth(&self) -> usize {
        fn depth(stmts: &[Statement]) -> usize {
            stmts
                .iter()
                .map(|s| match s {
                    Statement::For { body } => 1 + depth(body),
                    Statement::If { then, .. } => depth(then),
                    Statement::IfElse {
                        then, otherwise, ..
                    } => depth(then).max(depth(otherwise)),
                    Statement::Command { .. } | Statement::Empty => 0,
                })
                .max()
                .unwrap_or(0)
        }
        depth(&self.statements)
    }

    /// Number of AST nodes; used for sizing and diagnostics.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        walk(&self.statements, &mut |_| n += 1);
        n
    }

    pub fn commands(&self) -> Vec<Command> {
        let mut out = Vec::new();
        walk(&self.statements, &mut |s| {
            if let Statement::Command { command } = s {
                out.push(*command);
            }
        });
        out
    }
}

/// Pre-order traversal over every statement.
pub fn walk(stmts: &[Statement], f: &mut dyn FnMut(&Statement)) {
    for s in stmts {
        f(s);
        match s {
            Statement::For { body } => walk(body, f),
            Statement::If { then, .. } => walk(then, f),
            Statement::IfElse {
                then, otherwise, ..
            } => {
                walk(then, f);
                walk(otherwise, f);
            }
            Statement::Command { .. } | Statement::Empty => {}
        }
    }
}

impl Statement {
    pub fn command(command: Command) -> Self {
        Statement::Command { command }
    }

    pub fn for_each(body: Vec<Statement>) -> Self {
        Statement::For { body }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::printer::print(self))
    }
}
