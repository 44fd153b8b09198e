//! Policies, opponents and maps bundled with the crate.

use std::path::Path;

use crate::microlang::{parse, ParseError, Program};
use crate::sim::{GameState, MapFile, SimError, StatsTable};

/// A program together with the name it was loaded under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedProgram {
    pub name: String,
    pub program: Program,
}

impl NamedProgram {
    pub fn new(name: impl Into<String>, program: Program) -> Self {
        NamedProgram {
            name: name.into(),
            program,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Map(#[from] SimError),
    #[error("unknown bundled map {0:?}")]
    UnknownMap(String),
}

const POLICIES: [(&str, &str); 20] = [
    ("P01", include_str!("../fixtures/policies/P01.mrl")),
    ("P02", include_str!("../fixtures/policies/P02.mrl")),
    ("P03", include_str!("../fixtures/policies/P03.mrl")),
    ("P04", include_str!("../fixtures/policies/P04.mrl")),
    ("P05", include_str!("../fixtures/policies/P05.mrl")),
    ("P06", include_str!("../fixtures/policies/P06.mrl")),
    ("P07", include_str!("../fixtures/policies/P07.mrl")),
    ("P08", include_str!("../fixtures/policies/P08.mrl")),
    ("P09", include_str!("../fixtures/policies/P09.mrl")),
    ("P10", include_str!("../fixtures/policies/P10.mrl")),
    ("P11", include_str!("../fixtures/policies/P11.mrl")),
    ("P12", include_str!("../fixtures/policies/P12.mrl")),
    ("P13", include_str!("../fixtures/policies/P13.mrl")),
    ("P14", include_str!("../fixtures/policies/P14.mrl")),
    ("P15", include_str!("../fixtures/policies/P15.mrl")),
    ("P16", include_str!("../fixtures/policies/P16.mrl")),
    ("P17", include_str!("../fixtures/policies/P17.mrl")),
    ("P18", include_str!("../fixtures/policies/P18.mrl")),
    ("P19", include_str!("../fixtures/policies/P19.mrl")),
    ("P20", include_str!("../fixtures/policies/P20.mrl")),
];

const OPPONENTS: [(&str, &str); 10] = [
    ("O01", include_str!("../fixtures/opponents/O01.mrl")),
    ("O02", include_str!("../fixtures/opponents/O02.mrl")),
    ("O03", include_str!("../fixtures/opponents/O03.mrl")),
    ("O04", include_str!("../fixtures/opponents/O04.mrl")),
    ("O05", include_str!("../fixtures/opponents/O05.mrl")),
    ("O06", include_str!("../fixtures/opponents/O06.mrl")),
    ("O07", include_str!("../fixtures/opponents/O07.mrl")),
    ("O08", include_str!("../fixtures/opponents/O08.mrl")),
    ("O09", include_str!("../fixtures/opponents/O09.mrl")),
    ("O10", include_str!("../fixtures/opponents/O10.mrl")),
];

const POOL_8X8: [(&str, &str); 10] = [
    ("Q01", include_str!("../fixtures/pool8x8/Q01.mrl")),
    ("Q02", include_str!("../fixtures/pool8x8/Q02.mrl")),
    ("Q03", include_str!("../fixtures/pool8x8/Q03.mrl")),
    ("Q04", include_str!("../fixtures/pool8x8/Q04.mrl")),
    ("Q05", include_str!("../fixtures/pool8x8/Q05.mrl")),
    ("Q06", include_str!("../fixtures/pool8x8/Q06.mrl")),
    ("Q07", include_str!("../fixtures/pool8x8/Q07.mrl")),
    ("Q08", include_str!("../fixtures/pool8x8/Q08.mrl")),
    ("Q09", include_str!("../fixtures/pool8x8/Q09.mrl")),
    ("Q10", include_str!("../fixtures/pool8x8/Q10.mrl")),
];

pub const TIERED: &str = include_str!("../fixtures/tiered.mrl");
pub const TIERED_VARIANT: &str = include_str!("../fixtures/tiered_variant.mrl");

pub const MAP_16X16: &str = "BaseWorkers-16x16A";
pub const MAP_8X8: &str = "BaseWorkers-8x8";
pub const MAP_NAMES: [&str; 2] = [MAP_16X16, MAP_8X8];

fn parse_all(items: &[(&str, &str)]) -> Vec<NamedProgram> {
    items
        .iter()
        .map(|(name, src)| NamedProgram::new(*name, parse(src).expect("bundled fixture parses")))
        .collect()
}

/// The 20 evaluated policies, in order.
pub fn policies() -> Vec<NamedProgram> {
    parse_all(&POLICIES)
}

/// The 10 opponents, in signature order.
pub fn opponents() -> Vec<NamedProgram> {
    parse_all(&OPPONENTS)
}

/// Programs synthesized for the small map, used by the Rand-Other baseline.
pub fn pool_8x8() -> Vec<NamedProgram> {
    parse_all(&POOL_8X8)
}

pub fn policy_sources() -> &'static [(&'static str, &'static str)] {
    &POLICIES
}

pub fn tiered() -> Program {
    parse(TIERED).expect("bundled fixture parses")
}

pub fn map_json(name: &str) -> Option<&'static str> {
    match name {
        MAP_16X16 => Some(include_str!("../fixtures/maps/BaseWorkers-16x16A.json")),
        MAP_8X8 => Some(include_str!("../fixtures/maps/BaseWorkers-8x8.json")),
        _ => None,
    }
}

/// Opening state of a bundled map with default statistics.
pub fn map_state(name: &str) -> Result<GameState, FixtureError> {
    map_state_with(name, StatsTable::default())
}

pub fn map_state_with(name: &str, stats: StatsTable) -> Result<GameState, FixtureError> {
    let json = map_json(name).ok_or_else(|| FixtureError::UnknownMap(name.to_string()))?;
    Ok(MapFile::from_json(json)?.to_state(stats, 0)?)
}

/// Loads a map from a bundled name or a JSON file path.
pub fn load_map(name_or_path: &str, stats: StatsTable) -> Result<GameState, FixtureError> {
    if map_json(name_or_path).is_some() {
        return map_state_with(name_or_path, stats);
    }
    let text = std::fs::read_to_string(name_or_path).map_err(|source| FixtureError::Io {
        path: name_or_path.to_string(),
        source,
    })?;
    Ok(MapFile::from_json(&text)?.to_state(stats, 0)?)
}

pub fn load_program(path: &Path) -> Result<Program, FixtureError> {
    let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text).map_err(|source| FixtureError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Every `.mrl` file of `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<NamedProgram>, FixtureError> {
    let io = |source| FixtureError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "mrl"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(NamedProgram::new(name, load_program(&p)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixtures_parse_and_validate() {
        for set in [policies(), opponents(), pool_8x8()] {
            for p in set {
                p.program.validate().unwrap();
                assert!(!p.program.is_empty(), "{}", p.name);
            }
        }
        assert_eq!(policies().len(), 20);
        assert_eq!(opponents().len(), 10);
    }

    #[test]
    fn maps_are_point_symmetric() {
        for name in MAP_NAMES {
            let s = map_state(name).unwrap();
            for u in &s.units {
                let mirror = crate::sim::Pos::new(s.width - 1 - u.pos.x, s.height - 1 - u.pos.y);
                let m = s.unit_at(mirror).expect("mirrored unit");
                assert_eq!(m.kind, u.kind);
                assert_eq!(m.owner.map(|o| o.opponent()), u.owner);
            }
        }
    }

    #[test]
    fn load_dir_sorts_by_name() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.mrl"), "for(Unit u){ u.idle() }").unwrap();
        std::fs::write(dir.path().join("a.mrl"), "").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let got = load_dir(dir.path()).unwrap();
        assert_eq!(got.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }
}
