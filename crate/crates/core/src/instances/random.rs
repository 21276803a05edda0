use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{int, ratio, Game, Rational};

/// Shape of a random game. Entries are small integers or halves so the
/// exact data stays readable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomGameSpec {
    pub players: usize,
    pub goods: usize,
    pub resources: usize,
    /// When false, valuations may be negative.
    pub nonnegative_valuations: bool,
}

impl Default for RandomGameSpec {
    fn default() -> Self {
        RandomGameSpec { players: 4, goods: 3, resources: 2, nonnegative_valuations: true }
    }
}

fn half_step(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    ratio(rng.gen_range(2 * lo..=2 * hi), 2)
}

/// Positive production matrix (so every design space is bounded), positive
/// endowments and valuations in `[0, 5]` or `[-2, 5]`.
pub fn gen_random_game(spec: RandomGameSpec, seed: u64) -> Result<Game> {
    let RandomGameSpec { players, goods, resources, nonnegative_valuations } = spec;
    if players == 0 || goods == 0 || resources == 0 {
        return Err(Error::BadInstance("random game needs players, goods and resources".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Vec<Rational>> =
        (0..resources).map(|_| (0..goods).map(|_| int(rng.gen_range(1..=4))).collect()).collect();
    let b: Vec<Vec<Rational>> =
        (0..players).map(|_| (0..resources).map(|_| int(rng.gen_range(1..=5))).collect()).collect();
    let lo = if nonnegative_valuations { 0 } else { -2 };
    let v: Vec<Vec<Rational>> = (0..players).map(|_| (0..goods).map(|_| half_step(&mut rng, lo, 5)).collect()).collect();
    Game::new(a, b, v)
}
