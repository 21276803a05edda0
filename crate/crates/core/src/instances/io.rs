use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::transit::{Line, Rider, TransitScenario};
use crate::error::{Error, Result};
use crate::game::Game;

pub fn load_game(path: impl AsRef<Path>) -> Result<Game> {
    Game::from_json(&fs::read_to_string(path)?)
}

pub fn save_game(game: &Game, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, game.to_json())?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct NodeRow {
    id: usize,
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct LineRow {
    name: String,
    length_km: f64,
    /// Node ids separated by spaces.
    stops: String,
}

#[derive(Serialize, Deserialize)]
struct RiderRow {
    id: usize,
    origin: usize,
    destination: usize,
}

/// Writes `nodes.csv`, `lines.csv` and `riders.csv` into `dir`.
pub fn write_scenario(scenario: &TransitScenario, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("nodes.csv"))?;
    for (id, &(x, y)) in scenario.nodes.iter().enumerate() {
        w.serialize(NodeRow { id, x, y })?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("lines.csv"))?;
    for line in &scenario.lines {
        let stops = line.stops.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        w.serialize(LineRow { name: line.name.clone(), length_km: line.length_km, stops })?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("riders.csv"))?;
    for (id, r) in scenario.riders.iter().enumerate() {
        w.serialize(RiderRow { id, origin: r.origin, destination: r.destination })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scenario(dir: impl AsRef<Path>) -> Result<TransitScenario> {
    let dir = dir.as_ref();
    let mut nodes = Vec::new();
    for (k, row) in csv::Reader::from_path(dir.join("nodes.csv"))?.deserialize::<NodeRow>().enumerate() {
        let row = row?;
        if row.id != k {
            return Err(Error::parse("nodes.csv", format!("row {k} has id {}", row.id)));
        }
        nodes.push((row.x, row.y));
    }
    let mut lines = Vec::new();
    for row in csv::Reader::from_path(dir.join("lines.csv"))?.deserialize::<LineRow>() {
        let row = row?;
        let stops = row
            .stops
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|e| Error::parse("lines.csv", format!("line {}: {e}", row.name))))
            .collect::<Result<Vec<_>>>()?;
        lines.push(Line { name: row.name, stops, length_km: row.length_km });
    }
    let mut riders = Vec::new();
    for row in csv::Reader::from_path(dir.join("riders.csv"))?.deserialize::<RiderRow>() {
        let row = row?;
        riders.push(Rider { origin: row.origin, destination: row.destination });
    }
    let scenario = TransitScenario { nodes, lines, riders };
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_empty_core_example, gen_grid_city, GridCitySpec};

    #[test]
    fn game_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let g = gen_empty_core_example();
        save_game(&g, &path).unwrap();
        assert_eq!(load_game(&path).unwrap(), g);
    }

    #[test]
    fn scenario_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = gen_grid_city(GridCitySpec { seed: 3, width: 8, height: 8, lines: 4, riders: 10 }).unwrap();
        write_scenario(&s, dir.path()).unwrap();
        assert_eq!(read_scenario(dir.path()).unwrap(), s);
    }

    #[test]
    fn bad_stop_list_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let s = gen_grid_city(GridCitySpec { seed: 3, width: 4, height: 4, lines: 1, riders: 2 }).unwrap();
        write_scenario(&s, dir.path()).unwrap();
        fs::write(dir.path().join("lines.csv"), "name,length_km,stops\nL0,1.2,0 x\n").unwrap();
        assert!(matches!(read_scenario(dir.path()), Err(Error::Parse { .. })));
    }
}
