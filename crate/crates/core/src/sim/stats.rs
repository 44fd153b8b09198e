use serde::{Deserialize, Serialize};

use super::UnitKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitStats {
    pub hp: i32,
    pub attack_damage: i32,
    /// Chebyshev distance, in cells.
    pub attack_range: i32,
    pub cost: i32,
    /// The unit may move only on ticks divisible by this value.
    pub move_period: u32,
    pub can_move: bool,
    pub can_attack: bool,
    pub can_harvest: bool,
    pub can_build: bool,
}

impl UnitStats {
    const fn mobile(hp: i32, attack_damage: i32, attack_range: i32, cost: i32, move_period: u32) -> Self {
        UnitStats {
            hp,
            attack_damage,
            attack_range,
            cost,
            move_period,
            can_move: true,
            can_attack: true,
            can_harvest: false,
            can_build: false,
        }
    }

    const fn structure(hp: i32, cost: i32) -> Self {
        UnitStats {
            hp,
            attack_damage: 0,
            attack_range: 0,
            cost,
            move_period: 1,
            can_move: false,
            can_attack: false,
            can_harvest: false,
            can_build: false,
        }
    }
}

/// Per-kind statistics. Every field can be overridden from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsTable {
    pub worker: UnitStats,
    pub light: UnitStats,
    pub heavy: UnitStats,
    pub ranged: UnitStats,
    pub base: UnitStats,
    pub barracks: UnitStats,
}

impl Default for StatsTable {
    fn default() -> Self {
        StatsTable {
            worker: UnitStats {
                can_harvest: true,
                can_build: true,
                ..UnitStats::mobile(1, 1, 1, 1, 1)
            },
            light: UnitStats::mobile(4, 2, 1, 2, 1),
            heavy: UnitStats::mobile(4, 4, 1, 2, 2),
            ranged: UnitStats::mobile(1, 1, 3, 2, 1),
            base: UnitStats::structure(10, 10),
            barracks: UnitStats::structure(4, 5),
        }
    }
}

const RESOURCE: UnitStats = UnitStats::structure(1, 0);

impl StatsTable {
    pub fn get(&self, kind: UnitKind) -> &UnitStats {
        match kind {
            UnitKind::Worker => &self.worker,
            UnitKind::Light => &self.light,
            UnitKind::Heavy => &self.heavy,
            UnitKind::Ranged => &self.ranged,
            UnitKind::Base => &self.base,
            UnitKind::Barracks => &self.barracks,
            UnitKind::Resource => &RESOURCE,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structures_neither_move_nor_attack() {
        let t = StatsTable::default();
        for k in UnitKind::ALL {
            let s = t.get(k);
            assert!(s.hp >= 1, "{k:?}");
            if matches!(k, UnitKind::Base | UnitKind::Barracks | UnitKind::Resource) {
                assert!(!s.can_move && !s.can_attack, "{k:?}");
            }
        }
        assert!(t.worker.can_build && t.worker.can_harvest);
    }

    #[test]
    fn partial_override_from_json() {
        let t: StatsTable = serde_json::from_str(
            r#"{"light": {"hp": 6, "attack_damage": 2, "attack_range": 1, "cost": 3, "move_period": 1,
                "can_move": true, "can_attack": true, "can_harvest": false, "can_build": false}}"#,
        )
        .unwrap();
        assert_eq!(t.light.hp, 6);
        assert_eq!(t.heavy, StatsTable::default().heavy);
    }
}
