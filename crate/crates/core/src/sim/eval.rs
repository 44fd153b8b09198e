use std::collections::HashSet;

use super::state::{feature_slot, mix64, Activity, AssignedAction, CommandKind, Effect, GameState, JointAssignment, Player, Pos, Unit, UnitKind};
use super::SimError;
use crate::microlang::{BoolExpr, Command, Criterion, Direction, Program, Statement, TargetPlayer, UnitType};

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Skip re-entering a loop that has already run during this evaluation.
    /// Re-running a loop can never add an assignment, so both settings agree.
    pub memoize_loops: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { memoize_loops: true }
    }
}

/// Computes the joint assignment of `player` for state `s`.
pub fn evaluate_policy(p: &Program, s: &GameState, player: Player) -> Result<JointAssignment, SimError> {
    evaluate_with(p, s, player, EvalOptions::default())
}

pub fn evaluate_with(
    p: &Program,
    s: &GameState,
    player: Player,
    opts: EvalOptions,
) -> Result<JointAssignment, SimError> {
    p.validate().map_err(|e| SimError::IllegalProgram(e.to_string()))?;
    Ok(evaluate_unchecked(p, s, player, opts))
}

pub(crate) fn evaluate_unchecked(p: &Program, s: &GameState, player: Player, opts: EvalOptions) -> JointAssignment {
    let mut ev = Evaluator::new(s, player, opts);
    ev.block(&p.statements, None);
    ev.out
}

/// Clockwise order starting at Up, in the player's own frame.
const CLOCKWISE: [Direction; 4] = [Direction::Up, Direction::Right, Direction::Down, Direction::Left];

pub(crate) fn delta(player: Player, d: Direction) -> (i32, i32) {
    let (dx, dy) = match d {
        Direction::Up => (0, -1),
        Direction::Right => (1, 0),
        Direction::Down => (0, 1),
        Direction::Left => (-1, 0),
        Direction::EnemyDir => (0, 0),
    };
    match player {
        Player::P0 => (dx, dy),
        Player::P1 => (-dx, -dy),
    }
}

fn dist(a: Pos, b: Pos) -> (i32, i32) {
    (a.chebyshev(b), a.manhattan(b))
}

struct Evaluator<'a> {
    s: &'a GameState,
    player: Player,
    own: Vec<&'a Unit>,
    enemies: Vec<&'a Unit>,
    nodes: Vec<&'a Unit>,
    occupied: Vec<bool>,
    out: JointAssignment,
    reserved_cells: HashSet<Pos>,
    reserved_resources: i32,
    pending: [u32; 6],
    harvesters: u32,
    done_loops: HashSet<usize>,
    memoize: bool,
}

impl<'a> Evaluator<'a> {
    fn new(s: &'a GameState, player: Player, opts: EvalOptions) -> Self {
        let mut occupied = vec![false; (s.width * s.height) as usize];
        for u in &s.units {
            if s.in_bounds(u.pos) {
                occupied[(u.pos.y * s.width + u.pos.x) as usize] = true;
            }
        }
        Evaluator {
            s,
            player,
            own: s.units_of(player).collect(),
            enemies: s.units_of(player.opponent()).collect(),
            nodes: s.units.iter().filter(|u| u.kind == UnitKind::Resource).collect(),
            occupied,
            out: JointAssignment::new(),
            reserved_cells: HashSet::new(),
            reserved_resources: 0,
            pending: [0; 6],
            harvesters: 0,
            done_loops: HashSet::new(),
            memoize: opts.memoize_loops,
        }
    }

    fn block(&mut self, stmts: &[Statement], u: Option<&'a Unit>) {
        for st in stmts {
            match st {
                Statement::For { body } => {
                    if body.is_empty() {
                        continue;
                    }
                    if self.memoize && !self.done_loops.insert(body.as_ptr() as usize) {
                        continue;
                    }
                    for i in 0..self.own.len() {
                        let v = self.own[i];
                        self.block(body, Some(v));
                    }
                }
                Statement::If { cond, then } => {
                    if self.cond(cond, u) {
                        self.block(then, u);
                    }
                }
                Statement::IfElse { cond, then, otherwise } => {
                    if self.cond(cond, u) {
                        self.block(then, u);
                    } else {
                        self.block(otherwise, u);
                    }
                }
                Statement::Command { command } => {
                    if let Some(u) = u {
                        if !self.out.contains_key(&u.id) {
                            if let Some(a) = self.resolve(command, u) {
                                self.commit(u, a);
                            }
                        }
                    }
                }
                Statement::Empty => {}
            }
        }
    }

    fn commit(&mut self, u: &Unit, a: AssignedAction) {
        if let Effect::Produce { kind, at } = a.effect {
            self.reserved_cells.insert(at);
            self.reserved_resources += self.s.stats.get(kind).cost;
            if let Some(slot) = feature_slot(kind) {
                self.pending[slot] += 1;
            }
        }
        if a.command == CommandKind::Harvest {
            self.harvesters += 1;
        }
        let prev = self.out.insert(u.id, a);
        debug_assert!(prev.is_none(), "assignment overwritten for unit {}", u.id);
    }

    fn stats(&self, u: &Unit) -> &super::UnitStats {
        self.s.stats.get(u.kind)
    }

    fn count_own(&self, t: UnitType) -> usize {
        let k = UnitKind::from(t);
        self.own.iter().filter(|u| u.kind == k).count()
    }

    fn cond(&self, b: &BoolExpr, u: Option<&Unit>) -> bool {
        let n = |v: u32| v as usize;
        match *b {
            BoolExpr::HasNumberOfUnits(t, c) => self.count_own(t) >= n(c),
            BoolExpr::OpponentHasNumberOfUnits(t, c) => {
                let k = UnitKind::from(t);
                self.enemies.iter().filter(|e| e.kind == k).count() >= n(c)
            }
            BoolExpr::HasLessNumberOfUnits(t, c) => self.count_own(t) < n(c),
            BoolExpr::HaveQtdUnitsAttacking(c) => {
                self.own.iter().filter(|v| v.activity == Activity::Attacking).count() >= n(c)
            }
            BoolExpr::HasUnitWithinDistanceFromOpponent(c) => self
                .own
                .iter()
                .any(|v| self.enemies.iter().any(|e| v.pos.chebyshev(e.pos) <= c as i32)),
            BoolExpr::HasNumberOfWorkersHarvesting(c) => {
                self.own
                    .iter()
                    .filter(|v| v.kind == UnitKind::Worker && v.activity == Activity::Harvesting)
                    .count()
                    >= n(c)
            }
            BoolExpr::IsType(t) => u.is_some_and(|v| v.kind == UnitKind::from(t)),
            BoolExpr::IsBuilder => u.is_some_and(|v| v.kind == UnitKind::Worker),
            BoolExpr::CanAttack => u.is_some_and(|v| self.stats(v).can_attack),
            BoolExpr::CanHarvest => u.is_some_and(|v| self.stats(v).can_harvest),
            BoolExpr::HasUnitThatKillsInOneAttack => kills_in_one(self.s, &self.own, &self.enemies),
            BoolExpr::OpponentHasUnitThatKillsUnitInOneAttack => kills_in_one(self.s, &self.enemies, &self.own),
            BoolExpr::HasUnitInOpponentRange => in_range_of(self.s, &self.own, &self.enemies),
            BoolExpr::OpponentHasUnitInPlayerRange => in_range_of(self.s, &self.enemies, &self.own),
        }
    }

    fn resolve(&self, c: &Command, u: &'a Unit) -> Option<AssignedAction> {
        let st = self.stats(u);
        let (command, effect) = match *c {
            Command::Train(t, d, n) => {
                let ok = match u.kind {
                    UnitKind::Base => t == UnitType::Worker,
                    UnitKind::Barracks => matches!(t, UnitType::Light | UnitType::Heavy | UnitType::Ranged),
                    _ => false,
                };
                if !ok {
                    return None;
                }
                (CommandKind::Train, self.produce(u, t.into(), d, n)?)
            }
            Command::Build(t, d, n) => {
                if !st.can_build || !matches!(t, UnitType::Base | UnitType::Barracks) {
                    return None;
                }
                (CommandKind::Build, self.produce(u, t.into(), d, n)?)
            }
            Command::Attack(crit) => {
                if !st.can_attack {
                    return None;
                }
                let target = self.select(&self.enemies, crit, u)?;
                let effect = if u.pos.chebyshev(target.pos) <= st.attack_range {
                    Effect::Attack { target: target.id }
                } else {
                    Effect::Move { to: self.step_toward(u, target.pos)? }
                };
                (CommandKind::Attack, effect)
            }
            Command::MoveToUnit(tp, crit) => {
                if !st.can_move {
                    return None;
                }
                let target = match tp {
                    TargetPlayer::Enemy => self.select(&self.enemies, crit, u)?,
                    TargetPlayer::Ally => {
                        let allies: Vec<&Unit> = self.own.iter().copied().filter(|v| v.id != u.id).collect();
                        self.select(&allies, crit, u)?
                    }
                };
                (CommandKind::MoveToUnit, Effect::Move { to: self.step_toward(u, target.pos)? })
            }
            Command::Harvest(n) => {
                if !st.can_harvest || self.harvesters >= n {
                    return None;
                }
                (CommandKind::Harvest, self.harvest(u)?)
            }
            Command::Idle => (CommandKind::Idle, self.attack_in_range(u)?),
            Command::AttackIfInRange => (CommandKind::AttackIfInRange, self.attack_in_range(u)?),
            Command::MoveAway => {
                if !st.can_move {
                    return None;
                }
                let base = self.nearest(u.pos, self.own.iter().copied().filter(|v| v.kind == UnitKind::Base))?;
                let here = dist(u.pos, base.pos);
                let best = self
                    .neighbours(u.pos)
                    .into_iter()
                    .filter(|&p| self.free(p))
                    .map(|p| (dist(p, base.pos), p))
                    .fold(None::<((i32, i32), Pos)>, |acc, c| match acc {
                        Some(a) if a.0 >= c.0 => Some(a),
                        _ => Some(c),
                    })?;
                if best.0 <= here {
                    return None;
                }
                (CommandKind::MoveAway, Effect::Move { to: best.1 })
            }
        };
        Some(AssignedAction { command, effect })
    }

    fn attack_in_range(&self, u: &'a Unit) -> Option<Effect> {
        let st = self.stats(u);
        if !st.can_attack {
            return None;
        }
        let target = self.select(&self.enemies, Criterion::Closest, u)?;
        (u.pos.chebyshev(target.pos) <= st.attack_range).then_some(Effect::Attack { target: target.id })
    }

    fn harvest(&self, u: &'a Unit) -> Option<Effect> {
        if u.carried > 0 {
            let base = self.nearest(u.pos, self.own.iter().copied().filter(|v| v.kind == UnitKind::Base))?;
            if u.pos.chebyshev(base.pos) <= 1 {
                Some(Effect::Deposit { base: base.id })
            } else {
                Some(Effect::Move { to: self.step_toward(u, base.pos)? })
            }
        } else {
            let node = self.nearest(u.pos, self.nodes.iter().copied())?;
            if u.pos.chebyshev(node.pos) <= 1 {
                Some(Effect::Gather { node: node.id })
            } else {
                Some(Effect::Move { to: self.step_toward(u, node.pos)? })
            }
        }
    }

    fn produce(&self, u: &Unit, kind: UnitKind, d: Direction, n: u32) -> Option<Effect> {
        let slot = feature_slot(kind)?;
        let owned = self.own.iter().filter(|v| v.kind == kind).count() as u32;
        if owned + self.pending[slot] >= n {
            return None;
        }
        let cost = self.s.stats.get(kind).cost;
        if cost > self.s.player_resources[self.player.index()] - self.reserved_resources {
            return None;
        }
        let at = self.spawn_cell(u.pos, d)?;
        Some(Effect::Produce { kind, at })
    }

    fn spawn_cell(&self, from: Pos, d: Direction) -> Option<Pos> {
        let usable = |p: Pos| self.free(p) && !self.reserved_cells.contains(&p);
        if d == Direction::EnemyDir {
            let mut best: Option<((i32, i32), Pos)> = None;
            for dir in CLOCKWISE {
                let (dx, dy) = delta(self.player, dir);
                let p = from.offset(dx, dy);
                if !usable(p) {
                    continue;
                }
                let key = self
                    .enemies
                    .iter()
                    .map(|e| dist(p, e.pos))
                    .min()
                    .unwrap_or((0, 0));
                if best.is_none_or(|b| key < b.0) {
                    best = Some((key, p));
                }
            }
            return best.map(|b| b.1);
        }
        let start = CLOCKWISE.iter().position(|&c| c == d).expect("cardinal direction");
        (0..4)
            .map(|i| {
                let (dx, dy) = delta(self.player, CLOCKWISE[(start + i) % 4]);
                from.offset(dx, dy)
            })
            .find(|&p| usable(p))
    }

    fn free(&self, p: Pos) -> bool {
        self.s.in_bounds(p) && !self.occupied[(p.y * self.s.width + p.x) as usize]
    }

    fn neighbours(&self, p: Pos) -> [Pos; 4] {
        CLOCKWISE.map(|d| {
            let (dx, dy) = delta(self.player, d);
            p.offset(dx, dy)
        })
    }

    /// One greedy step that strictly reduces the distance to `target`.
    fn step_toward(&self, u: &Unit, target: Pos) -> Option<Pos> {
        if !self.stats(u).can_move {
            return None;
        }
        let here = dist(u.pos, target);
        let mut best: Option<((i32, i32), Pos)> = None;
        for p in self.neighbours(u.pos) {
            if !self.free(p) {
                continue;
            }
            let key = dist(p, target);
            if key < here && best.is_none_or(|b| key < b.0) {
                best = Some((key, p));
            }
        }
        best.map(|b| b.1)
    }

    /// Row-major position in this player's frame; used for all tie-breaks.
    fn frame_key(&self, p: Pos) -> (i32, i32) {
        let f = self.s.frame_pos(self.player, p);
        (f.y, f.x)
    }

    fn nearest<I: Iterator<Item = &'a Unit>>(&self, from: Pos, it: I) -> Option<&'a Unit> {
        it.min_by_key(|v| (dist(from, v.pos), self.frame_key(v.pos)))
    }

    fn select(&self, cands: &[&'a Unit], crit: Criterion, u: &Unit) -> Option<&'a Unit> {
        if cands.is_empty() {
            return None;
        }
        let st = &self.s.stats;
        let it = cands.iter().copied();
        let tie = |v: &Unit| (dist(u.pos, v.pos), self.frame_key(v.pos));
        match crit {
            Criterion::Strongest => it.min_by_key(|v| (-st.get(v.kind).attack_damage, tie(v))),
            Criterion::Weakest => it.min_by_key(|v| (st.get(v.kind).attack_damage, tie(v))),
            Criterion::Closest => it.min_by_key(|v| tie(v)),
            Criterion::Farthest => {
                it.min_by_key(|v| {
                    let (c, m) = dist(u.pos, v.pos);
                    ((-c, -m), self.frame_key(v.pos))
                })
            }
            Criterion::LessHealthy => it.min_by_key(|v| (v.hp, tie(v))),
            Criterion::MostHealthy => it.min_by_key(|v| (-v.hp, tie(v))),
            Criterion::Random => {
                let mut sorted: Vec<&'a Unit> = cands.to_vec();
                sorted.sort_by_key(|v| self.frame_key(v.pos));
                let (fy, fx) = self.frame_key(u.pos);
                let h = mix64(
                    self.s.seed
                        ^ mix64(u64::from(self.s.tick))
                        ^ mix64(((fy as u64) << 32) | (fx as u32 as u64)).rotate_left(17),
                );
                Some(sorted[(h % sorted.len() as u64) as usize])
            }
        }
    }
}

fn kills_in_one(s: &GameState, attackers: &[&Unit], victims: &[&Unit]) -> bool {
    attackers.iter().any(|a| {
        let st = s.stats.get(a.kind);
        st.can_attack && victims.iter().any(|v| st.attack_damage >= v.hp)
    })
}

/// Whether some unit of `targets` sits inside the attack range of some unit of `attackers`.
fn in_range_of(s: &GameState, targets: &[&Unit], attackers: &[&Unit]) -> bool {
    attackers.iter().any(|a| {
        let st = s.stats.get(a.kind);
        st.can_attack && targets.iter().any(|t| a.pos.chebyshev(t.pos) <= st.attack_range)
    })
}
