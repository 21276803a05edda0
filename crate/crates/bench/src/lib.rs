//! Fixtures shared by the benchmarks.

use ntulp::instances::{gen_grid_city, gen_random_game, gen_transit_game, GridCitySpec, RandomGameSpec};
use ntulp::Game;

/// A random nonnegative game with `players` players, three goods and two
/// resources.
pub fn random_game(players: usize, seed: u64) -> Game {
    gen_random_game(RandomGameSpec { players, ..RandomGameSpec::default() }, seed).expect("valid spec")
}

/// A small grid city, quick enough for repeated membership calls.
pub fn small_city(seed: u64) -> Game {
    let scenario = gen_grid_city(GridCitySpec { seed, width: 8, height: 8, lines: 6, riders: 16 }).expect("valid spec");
    gen_transit_game(&scenario).expect("some rider values a line")
}

/// Utilities of the uniform plan that uses 90% of the pooled budget on the
/// tightest resource: an interior incumbent that usually has objections.
pub fn uniform_plan_utilities(game: &Game) -> Vec<f64> {
    let n = game.num_players();
    let pooled: Vec<f64> = (0..game.num_resources()).map(|k| (0..n).map(|i| game.b_f64(i)[k]).sum()).collect();
    let level = game
        .a_f64()
        .iter()
        .zip(&pooled)
        .map(|(row, b)| b / row.iter().sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    (0..n).map(|i| game.v_f64(i).iter().map(|v| 0.9 * level * v).sum()).collect()
}
