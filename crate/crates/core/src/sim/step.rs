use std::collections::{BTreeMap, HashMap, HashSet};

use super::state::{feature_slot, Activity, CommandKind, Effect, GameState, JointAssignment, Player, Pos, Unit, UnitKind};

/// Advances `s` by one tick, applying both players' assignments simultaneously.
///
/// Resolution order: attacks, then gathers and deposits, then moves, then spawns.
/// Actions that have become illegal are dropped.
pub fn step(s: &GameState, a0: &JointAssignment, a1: &JointAssignment) -> GameState {
    let mut next = s.clone();
    let players = [(Player::P0, a0), (Player::P1, a1)];
    // Every action, tagged by acting unit id, in ascending id order.
    let mut actions: BTreeMap<u32, (Player, CommandKind, Effect)> = BTreeMap::new();
    for (player, a) in players {
        for (&id, act) in a {
            match s.unit(id) {
                Some(u) if u.owner == Some(player) => {
                    actions.insert(id, (player, act.command, act.effect));
                }
                _ => log::debug!("dropping action for unit {id}: not owned by {player:?}"),
            }
        }
    }

    // Attacks read the pre-step state and land simultaneously.
    let mut damage: HashMap<u32, i32> = HashMap::new();
    for (&id, &(_, _, eff)) in &actions {
        if let Effect::Attack { target } = eff {
            let (Some(u), Some(t)) = (s.unit(id), s.unit(target)) else {
                continue;
            };
            let st = s.stats.get(u.kind);
            if st.can_attack && t.owner.is_some() && t.owner != u.owner && u.pos.chebyshev(t.pos) <= st.attack_range {
                *damage.entry(target).or_default() += st.attack_damage;
            } else {
                log::debug!("dropping attack by {id} on {target}");
            }
        }
    }
    for u in &mut next.units {
        if let Some(d) = damage.get(&u.id) {
            u.hp -= d;
        }
    }
    for u in next.units.iter().filter(|u| u.hp <= 0 && u.carried > 0) {
        if let Some(p) = u.owner {
            next.lost[p.index()] += u.carried;
        }
    }
    next.units.retain(|u| u.owner.is_none() || u.hp > 0);

    for (&id, &(player, _, eff)) in &actions {
        match eff {
            Effect::Gather { node } => {
                let (Some(ui), Some(ni)) = (index_of(&next, id), index_of(&next, node)) else {
                    continue;
                };
                let (u, n) = (&next.units[ui], &next.units[ni]);
                if n.kind != UnitKind::Resource
                    || n.resources_left <= 0
                    || u.carried > 0
                    || !next.stats.get(u.kind).can_harvest
                    || u.pos.chebyshev(n.pos) > 1
                {
                    continue;
                }
                next.units[ni].resources_left -= 1;
                next.units[ui].carried += 1;
                next.collected[player.index()] += 1;
            }
            Effect::Deposit { base } => {
                let (Some(ui), Some(bi)) = (index_of(&next, id), index_of(&next, base)) else {
                    continue;
                };
                let (u, b) = (&next.units[ui], &next.units[bi]);
                if b.kind != UnitKind::Base || b.owner != Some(player) || u.carried <= 0 || u.pos.chebyshev(b.pos) > 1 {
                    continue;
                }
                next.player_resources[player.index()] += u.carried;
                next.units[ui].carried = 0;
            }
            _ => {}
        }
    }
    next.units.retain(|u| u.kind != UnitKind::Resource || u.resources_left > 0);

    // Moves: destinations must be empty before anyone moves; contested cells go to
    // the lowest id of one player, or to nobody when both players contest them.
    let occupied: HashSet<Pos> = next.units.iter().map(|u| u.pos).collect();
    let mut claims: BTreeMap<Pos, Vec<(u32, Player)>> = BTreeMap::new();
    for (&id, &(player, _, eff)) in &actions {
        if let Effect::Move { to } = eff {
            let Some(u) = next.unit(id) else { continue };
            let st = next.stats.get(u.kind);
            if !st.can_move
                || s.tick % st.move_period.max(1) != 0
                || u.pos.manhattan(to) != 1
                || !next.in_bounds(to)
                || occupied.contains(&to)
            {
                continue;
            }
            claims.entry(to).or_default().push((id, player));
        }
    }
    let mut moved_to: HashMap<u32, Pos> = HashMap::new();
    for (to, cs) in &claims {
        let first = cs[0].1;
        if cs.iter().any(|c| c.1 != first) {
            continue;
        }
        let winner = cs.iter().map(|c| c.0).min().expect("non-empty claim");
        moved_to.insert(winner, *to);
    }
    for u in &mut next.units {
        if let Some(&p) = moved_to.get(&u.id) {
            u.pos = p;
        }
    }

    // Spawns, in producer-id order.
    let occupied: HashSet<Pos> = next.units.iter().map(|u| u.pos).collect();
    let mut spawn_claims: BTreeMap<Pos, Vec<Player>> = BTreeMap::new();
    for &(player, _, eff) in actions.values() {
        if let Effect::Produce { at, .. } = eff {
            spawn_claims.entry(at).or_default().push(player);
        }
    }
    let mut spawned = Vec::new();
    for (&id, &(player, _, eff)) in &actions {
        let Effect::Produce { kind, at } = eff else { continue };
        let Some(u) = next.unit(id) else { continue };
        let contested = spawn_claims.get(&at).is_some_and(|ps| ps.iter().any(|&p| p != player));
        let cost = next.stats.get(kind).cost;
        let i = player.index();
        if contested
            || occupied.contains(&at)
            || spawned.iter().any(|s: &Unit| s.pos == at)
            || !next.in_bounds(at)
            || u.pos.chebyshev(at) != 1
            || next.player_resources[i] < cost
            || kind == UnitKind::Resource
        {
            log::debug!("dropping spawn by {id} at ({}, {})", at.x, at.y);
            continue;
        }
        next.player_resources[i] -= cost;
        next.spent[i] += cost;
        if let Some(slot) = feature_slot(kind) {
            next.produced[i][slot] += 1;
        }
        spawned.push(Unit {
            id: next.next_id,
            kind,
            owner: Some(player),
            pos: at,
            hp: next.stats.get(kind).hp,
            carried: 0,
            resources_left: 0,
            activity: Activity::None,
        });
        next.next_id += 1;
    }
    next.units.extend(spawned);

    for u in &mut next.units {
        u.activity = match actions.get(&u.id) {
            None => Activity::None,
            Some((_, cmd, _)) => match cmd {
                CommandKind::Attack | CommandKind::Idle | CommandKind::AttackIfInRange => Activity::Attacking,
                CommandKind::Harvest => Activity::Harvesting,
                _ => Activity::Other,
            },
        };
    }
    next.tick += 1;
    next
}

fn index_of(s: &GameState, id: u32) -> Option<usize> {
    s.units.binary_search_by_key(&id, |u| u.id).ok()
}
