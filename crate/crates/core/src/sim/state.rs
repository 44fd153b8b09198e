use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::StatsTable;
use super::SimError;
use crate::microlang::UnitType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    P0,
    P1,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::P0 => 0,
            Player::P1 => 1,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::P0 => Player::P1,
            Player::P1 => Player::P0,
        }
    }

    pub fn from_index(i: usize) -> Option<Player> {
        match i {
            0 => Some(Player::P0),
            1 => Some(Player::P1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitKind {
    Worker,
    Light,
    Ranged,
    Heavy,
    Base,
    Barracks,
    Resource,
}

impl UnitKind {
    pub const ALL: [UnitKind; 7] = [
        UnitKind::Worker,
        UnitKind::Light,
        UnitKind::Ranged,
        UnitKind::Heavy,
        UnitKind::Base,
        UnitKind::Barracks,
        UnitKind::Resource,
    ];

    pub fn unit_type(self) -> Option<UnitType> {
        match self {
            UnitKind::Worker => Some(UnitType::Worker),
            UnitKind::Light => Some(UnitType::Light),
            UnitKind::Ranged => Some(UnitType::Ranged),
            UnitKind::Heavy => Some(UnitType::Heavy),
            UnitKind::Base => Some(UnitType::Base),
            UnitKind::Barracks => Some(UnitType::Barracks),
            UnitKind::Resource => None,
        }
    }

    fn code(self) -> u8 {
        self as u8
    }
}

impl From<UnitType> for UnitKind {
    fn from(t: UnitType) -> Self {
        match t {
            UnitType::Base => UnitKind::Base,
            UnitType::Barracks => UnitKind::Barracks,
            UnitType::Ranged => UnitKind::Ranged,
            UnitType::Heavy => UnitKind::Heavy,
            UnitType::Light => UnitKind::Light,
            UnitType::Worker => UnitKind::Worker,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Pos { x, y }
    }

    pub fn chebyshev(self, o: Pos) -> i32 {
        (self.x - o.x).abs().max((self.y - o.y).abs())
    }

    pub fn manhattan(self, o: Pos) -> i32 {
        (self.x - o.x).abs() + (self.y - o.y).abs()
    }

    pub fn offset(self, dx: i32, dy: i32) -> Pos {
        Pos::new(self.x + dx, self.y + dy)
    }
}

/// What a unit did on the previous tick; read by state-level conditions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activity {
    #[default]
    None,
    Attacking,
    Harvesting,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Unit {
    pub id: u32,
    pub kind: UnitKind,
    pub owner: Option<Player>,
    pub pos: Pos,
    pub hp: i32,
    pub carried: i32,
    /// Only meaningful for resource nodes.
    pub resources_left: i32,
    #[serde(default)]
    pub activity: Activity,
}

/// Which command produced an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CommandKind {
    Build,
    Train,
    MoveToUnit,
    Attack,
    Harvest,
    Idle,
    MoveAway,
    AttackIfInRange,
}

/// The concrete effect a unit will attempt during the next step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Effect {
    Move { to: Pos },
    Attack { target: u32 },
    Gather { node: u32 },
    Deposit { base: u32 },
    Produce { kind: UnitKind, at: Pos },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssignedAction {
    pub command: CommandKind,
    pub effect: Effect,
}

pub type JointAssignment = BTreeMap<u32, AssignedAction>;

/// Two joint assignments agree when every unit attempts the same effect.
pub fn same_effects(a: &JointAssignment, b: &JointAssignment) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b.iter())
            .all(|((ia, xa), (ib, xb))| ia == ib && xa.effect == xb.effect)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub width: i32,
    pub height: i32,
    pub tick: u32,
    /// Sorted by ascending id.
    pub units: Vec<Unit>,
    pub player_resources: [i32; 2],
    /// Resources paid for spawned units.
    pub spent: [i32; 2],
    /// Resources destroyed with killed carriers.
    #[serde(default)]
    pub lost: [i32; 2],
    /// Resources picked up from nodes.
    pub collected: [u32; 2],
    /// Spawned-unit counts per player in feature order
    /// (Worker, Light, Heavy, Ranged, Base, Barracks).
    pub produced: [[u32; 6]; 2],
    pub next_id: u32,
    pub seed: u64,
    pub stats: StatsTable,
    pub assignments: [JointAssignment; 2],
}

pub(crate) fn feature_slot(kind: UnitKind) -> Option<usize> {
    match kind {
        UnitKind::Worker => Some(0),
        UnitKind::Light => Some(1),
        UnitKind::Heavy => Some(2),
        UnitKind::Ranged => Some(3),
        UnitKind::Base => Some(4),
        UnitKind::Barracks => Some(5),
        UnitKind::Resource => None,
    }
}

impl GameState {
    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }

    pub fn unit(&self, id: u32) -> Option<&Unit> {
        self.units
            .binary_search_by_key(&id, |u| u.id)
            .ok()
            .map(|i| &self.units[i])
    }

    pub fn unit_at(&self, p: Pos) -> Option<&Unit> {
        self.units.iter().find(|u| u.pos == p)
    }

    pub fn units_of(&self, player: Player) -> impl Iterator<Item = &Unit> {
        self.units.iter().filter(move |u| u.owner == Some(player))
    }

    pub fn has_units(&self, player: Player) -> bool {
        self.units_of(player).next().is_some()
    }

    pub fn count_kind(&self, player: Player, kind: UnitKind) -> usize {
        self.units_of(player).filter(|u| u.kind == kind).count()
    }

    /// Map a position into a player's own frame: player 1 sees the board rotated 180°.
    pub fn frame_pos(&self, player: Player, p: Pos) -> Pos {
        match player {
            Player::P0 => p,
            Player::P1 => Pos::new(self.width - 1 - p.x, self.height - 1 - p.y),
        }
    }

    pub fn resources_in_nodes(&self) -> i64 {
        self.units
            .iter()
            .filter(|u| u.kind == UnitKind::Resource)
            .map(|u| i64::from(u.resources_left))
            .sum()
    }

    pub fn resources_carried(&self) -> i64 {
        self.units.iter().map(|u| i64::from(u.carried)).sum()
    }

    /// Total resources in the closed system: banked, carried, spent, lost and unmined.
    pub fn resource_total(&self) -> i64 {
        i64::from(self.player_resources[0])
            + i64::from(self.player_resources[1])
            + i64::from(self.spent[0])
            + i64::from(self.spent[1])
            + i64::from(self.lost[0])
            + i64::from(self.lost[1])
            + self.resources_carried()
            + self.resources_in_nodes()
    }

    /// Checks the structural invariants: sorted unique ids, in-bounds positions,
    /// at most one unit per cell.
    pub fn check_consistency(&self) -> Result<(), SimError> {
        let mut seen = std::collections::BTreeSet::new();
        for w in self.units.windows(2) {
            if w[0].id >= w[1].id {
                return Err(SimError::InconsistentState(format!(
                    "unit ids not strictly ascending at {}",
                    w[1].id
                )));
            }
        }
        for u in &self.units {
            if !self.in_bounds(u.pos) {
                return Err(SimError::InconsistentState(format!("unit {} out of bounds", u.id)));
            }
            if !seen.insert(u.pos) {
                return Err(SimError::InconsistentState(format!(
                    "two units at ({}, {})",
                    u.pos.x, u.pos.y
                )));
            }
            if (u.kind == UnitKind::Resource) != u.owner.is_none() {
                return Err(SimError::InconsistentState(format!(
                    "unit {} ownership does not match its kind",
                    u.id
                )));
            }
        }
        if self.units.iter().any(|u| u.id >= self.next_id) {
            return Err(SimError::InconsistentState("next_id not above all ids".into()));
        }
        Ok(())
    }

    /// Portable 64-bit FNV-1a digest of the observable state.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv::new();
        h.i32(self.width);
        h.i32(self.height);
        h.u32(self.tick);
        h.i32(self.player_resources[0]);
        h.i32(self.player_resources[1]);
        for u in &self.units {
            h.u32(u.id);
            h.byte(u.kind.code());
            h.byte(match u.owner {
                None => 2,
                Some(p) => p.index() as u8,
            });
            h.i32(u.pos.x);
            h.i32(u.pos.y);
            h.i32(u.hp);
            h.i32(u.carried);
            h.i32(u.resources_left);
            h.byte(u.activity as u8);
        }
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn byte(&mut self, b: u8) {
        self.0 ^= u64::from(b);
        self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
    }
    fn u32(&mut self, v: u32) {
        for b in v.to_le_bytes() {
            self.byte(b);
        }
    }
    fn i32(&mut self, v: i32) {
        self.u32(v as u32);
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// Deterministic mixing used for the `Random` criterion.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// Map files

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapCell {
    pub pos: [i32; 2],
    pub kind: UnitKind,
    #[serde(default)]
    pub owner: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resources: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub width: i32,
    pub height: i32,
    pub cells: Vec<MapCell>,
    #[serde(default = "default_starting_resources")]
    pub starting_resources: [i32; 2],
}

fn default_starting_resources() -> [i32; 2] {
    [5, 5]
}

impl MapFile {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Map(e.to_string()))
    }

    /// Builds the opening state. Player units receive interleaved ids ordered by
    /// each player's own frame so mirrored maps give mirrored iteration orders;
    /// resource nodes are numbered afterwards.
    pub fn to_state(&self, stats: StatsTable, seed: u64) -> Result<GameState, SimError> {
        if self.width <= 0 || self.height <= 0 {
            return Err(SimError::Map("map dimensions must be positive".into()));
        }
        let mut state = GameState {
            width: self.width,
            height: self.height,
            tick: 0,
            units: Vec::new(),
            player_resources: self.starting_resources,
            spent: [0, 0],
            lost: [0, 0],
            collected: [0, 0],
            produced: [[0; 6]; 2],
            next_id: 0,
            seed,
            stats,
            assignments: Default::default(),
        };
        let mut per_player: [Vec<&MapCell>; 2] = [Vec::new(), Vec::new()];
        let mut nodes = Vec::new();
        for c in &self.cells {
            match (c.kind, c.owner) {
                (UnitKind::Resource, None) => nodes.push(c),
                (UnitKind::Resource, Some(_)) => {
                    return Err(SimError::Map("resource cells cannot have an owner".into()))
                }
                (_, Some(o)) if o < 2 => per_player[o as usize].push(c),
                (k, o) => {
                    return Err(SimError::Map(format!("{k:?} cell has invalid owner {o:?}")))
                }
            }
        }
        for (i, list) in per_player.iter_mut().enumerate() {
            let player = Player::from_index(i).expect("two players");
            list.sort_by_key(|c| {
                let f = state.frame_pos(player, Pos::new(c.pos[0], c.pos[1]));
                (f.y, f.x)
            });
        }
        nodes.sort_by_key(|c| (c.pos[1], c.pos[0]));
        let longest = per_player[0].len().max(per_player[1].len());
        let mut ordered: Vec<&MapCell> = Vec::new();
        for i in 0..longest {
            for list in &per_player {
                if let Some(c) = list.get(i) {
                    ordered.push(c);
                }
            }
        }
        ordered.extend(nodes);
        for c in ordered {
            let id = state.next_id;
            state.next_id += 1;
            state.units.push(Unit {
                id,
                kind: c.kind,
                owner: c.owner.and_then(|o| Player::from_index(o as usize)),
                pos: Pos::new(c.pos[0], c.pos[1]),
                hp: stats.get(c.kind).hp,
                carried: 0,
                resources_left: if c.kind == UnitKind::Resource {
                    c.resources.unwrap_or(20)
                } else {
                    0
                },
                activity: Activity::None,
            });
        }
        state.check_consistency()?;
        Ok(state)
    }
}
