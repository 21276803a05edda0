use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{int, ratio, Coalition, Game, Rational};

/// Three players, two goods, one unit budget each; the core is empty.
pub fn gen_empty_core_example() -> Game {
    Game::new(
        vec![vec![int(1), int(1)]],
        vec![vec![int(1)]; 3],
        vec![vec![ratio(2, 3), ratio(1, 3)], vec![ratio(2, 3), ratio(1, 3)], vec![ratio(-2, 3), ratio(1, 3)]],
    )
    .expect("fixed example is valid")
}

/// Single unit budgets, all-ones production row and `v_j^i = t_j^i` with
/// players numbered from one.
pub fn gen_cyclic(n: usize, t: &[Rational]) -> Result<Game> {
    let one = int(1);
    if t.is_empty() || t[0] <= one || t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadMoments);
    }
    if n == 0 {
        return Err(Error::BadInstance("cyclic game needs at least one player".into()));
    }
    let m = t.len();
    let valuations = (1..=n)
        .map(|i| t.iter().map(|tj| num_traits::pow(tj.clone(), i)).collect())
        .collect();
    Game::new(vec![vec![int(1); m]], vec![vec![int(1)]; n], valuations)
}

/// A 3-dimensional matching instance on `X = Y = Z = {0..n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeDMInstance {
    pub n: usize,
    pub triples: Vec<[usize; 3]>,
}

impl ThreeDMInstance {
    pub fn m(&self) -> usize {
        self.triples.len()
    }

    /// Player index of node `k` of part `part` (0 = X, 1 = Y, 2 = Z).
    pub fn node_player(&self, part: usize, k: usize) -> usize {
        part * self.n + k
    }

    fn validate(&self) -> Result<()> {
        if self.n <= 1 {
            return Err(Error::BadInstance(format!("matching instance needs n > 1, got {}", self.n)));
        }
        if self.triples.len() < self.n {
            return Err(Error::BadInstance(format!("{} triples is fewer than n = {}", self.triples.len(), self.n)));
        }
        if self.triples.iter().flatten().any(|&k| k >= self.n) {
            return Err(Error::BadInstance("triple references a node outside X, Y or Z".into()));
        }
        Ok(())
    }

    /// Whether the triples with these indices cover every node exactly once.
    pub fn is_perfect_matching(&self, edges: &[usize]) -> bool {
        if edges.len() != self.n {
            return false;
        }
        let mut seen = vec![[false; 3]; self.n];
        for &e in edges {
            for (part, &k) in self.triples[e].iter().enumerate() {
                if seen[k][part] {
                    return false;
                }
                seen[k][part] = true;
            }
        }
        true
    }
}

/// Random instance. Yes-instances contain a hidden perfect matching plus
/// `extra` random triples; no-instances leave node `z_{n-1}` uncovered.
pub fn random_3dm_instance(n: usize, extra: usize, yes: bool, seed: u64) -> ThreeDMInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::new();
    let z_range = if yes { n } else { n - 1 };
    if yes {
        let mut ys: Vec<usize> = (0..n).collect();
        let mut zs: Vec<usize> = (0..n).collect();
        ys.shuffle(&mut rng);
        zs.shuffle(&mut rng);
        triples.extend((0..n).map(|k| [k, ys[k], zs[k]]));
    } else {
        triples.extend((0..n).map(|k| [k, rng.gen_range(0..n), rng.gen_range(0..z_range)]));
    }
    for _ in 0..extra {
        triples.push([rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..z_range)]);
    }
    triples.shuffle(&mut rng);
    ThreeDMInstance { n, triples }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeDMGadget {
    pub game: Game,
    /// The instance after edge duplication.
    pub instance: ThreeDMInstance,
    /// The incumbent allocation: one unit of utility for everybody.
    pub u_star: Vec<f64>,
}

impl ThreeDMGadget {
    pub fn node_players(&self) -> std::ops::Range<usize> {
        0..3 * self.instance.n
    }

    pub fn edge_players(&self) -> std::ops::Range<usize> {
        3 * self.instance.n..3 * self.instance.n + self.instance.m()
    }

    /// Edge indices of the edge players in `s`.
    pub fn edges_in(&self, s: &Coalition) -> Vec<usize> {
        let first = 3 * self.instance.n;
        s.members().iter().filter(|&&i| i >= first).map(|&i| i - first).collect()
    }

    /// The coalition of all nodes plus the given edges.
    pub fn matching_coalition(&self, edges: &[usize]) -> Coalition {
        let first = 3 * self.instance.n;
        let members = self.node_players().chain(edges.iter().map(|&e| first + e));
        Coalition::new(members, self.game.num_players()).expect("valid members")
    }
}

fn node_off_edge_value(n: i64) -> Rational {
    ratio(1, 4 * n) * (int(1) - ratio(1, 2 * (n - 1) * (4 * n - 1)))
}

/// Game whose all-ones allocation is blocked exactly when the instance has
/// a perfect matching. The first triple is duplicated until the node
/// players' valuation of the shared good falls below their valuation of a
/// non-incident edge good.
pub fn gen_3dm_gadget(instance: &ThreeDMInstance) -> Result<ThreeDMGadget> {
    instance.validate()?;
    let mut inst = instance.clone();
    let mut sorted = inst.triples.clone();
    sorted.sort();
    let first = sorted[0];
    let ni = inst.n as i64;
    while node_off_edge_value(ni) <= ratio(1, 3 * ni + inst.m() as i64) {
        inst.triples.push(first);
    }
    let (n, m) = (inst.n, inst.m());
    let shared = ratio(1, (3 * n + m) as i64);
    let incident = ratio(1, 4 * ni - 1);
    let off = node_off_edge_value(ni);
    let mut valuations = Vec::with_capacity(3 * n + m);
    for part in 0..3 {
        for k in 0..n {
            let mut v: Vec<Rational> =
                inst.triples.iter().map(|t| if t[part] == k { incident.clone() } else { off.clone() }).collect();
            v.push(shared.clone());
            valuations.push(v);
        }
    }
    for e in 0..m {
        let mut v = vec![int(0); m + 1];
        v[e] = ratio(ni, 4 * ni - 1);
        v[m] = shared.clone();
        valuations.push(v);
    }
    let players = 3 * n + m;
    let mut labels: Vec<String> = ["x", "y", "z"].iter().flat_map(|p| (0..n).map(move |k| format!("{p}{k}"))).collect();
    labels.extend((0..m).map(|e| format!("t{e}")));
    let game = Game::new(vec![vec![int(1); m + 1]], vec![vec![int(1)]; players], valuations)?.with_labels(labels)?;
    Ok(ThreeDMGadget { game, instance: inst, u_star: vec![1.0; players] })
}
