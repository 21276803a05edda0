//! Brute-force ground truth for small games.
//!
//! Everything here enumerates coalitions outright, so the cost grows as
//! `2^N`. The blocking check builds its LPs from the design-utility spaces
//! directly and shares no code with the branch-and-bound search.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Coalition, Game, UtilityVector};
use crate::lp::{self, Bounds, Direction, LinearProgram, RowSense};
use crate::membership::Objection;

pub const MAX_ORACLE_PLAYERS: usize = 16;
pub const MAX_EVIDENCE_PLAYERS: usize = 4;
pub const MAX_EVIDENCE_GOODS: usize = 3;
pub const MAX_BALANCED_PLAYERS: usize = 4;
/// Gains above this count as strict improvements.
pub const STRICT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleVerdict {
    pub blocked: bool,
    /// The coalition with the largest least gain over `u*`.
    pub best: Option<Objection>,
    pub coalitions_checked: usize,
}

impl OracleVerdict {
    pub fn epsilon(&self) -> f64 {
        self.best.as_ref().map_or(0.0, |o| o.epsilon)
    }
}

/// `max min_{i ∈ S} (u_i − u*_i)` over `Z(S)`.
pub fn coalition_value(game: &Game, u_star: &[f64], s: &Coalition) -> Result<Objection> {
    let (j, n) = (game.num_goods(), game.num_players());
    let z = game.design_utility_space(s)?;
    // Variables: (x, u, t). Non-member utilities are pinned to zero.
    let mut bounds = z.bounds.clone();
    for (i, b) in bounds[j..j + n].iter_mut().enumerate() {
        if !s.contains(i) {
            *b = Bounds::fixed(0.0);
        }
    }
    bounds.push(Bounds::FREE);
    let mut objective = vec![0.0; j + n + 1];
    objective[j + n] = 1.0;
    let mut lp = LinearProgram::maximize(objective);
    lp.bounds = bounds;
    for row in &z.rows {
        let mut c = row.coefficients.clone();
        c.push(0.0);
        lp.add_row(c, row.sense, row.rhs);
    }
    for &i in s.members() {
        let mut c = vec![0.0; j + n + 1];
        c[j + i] = -1.0;
        c[j + n] = 1.0;
        lp.add_row(c, RowSense::Le, -u_star[i]);
    }
    let sol = lp::solve(&lp)?;
    if !sol.is_optimal() {
        return Err(Error::BadInstance(format!("coalition LP for {s} is {:?}", sol.status)));
    }
    let plan = sol.x[..j].to_vec();
    let utilities: Vec<f64> = s.members().iter().map(|&i| sol.x[j + i]).collect();
    Ok(Objection { epsilon: sol.objective_value, coalition: s.clone(), plan, utilities })
}

/// Checks every nonempty coalition for a strict improvement on `u*`.
pub fn is_blocked_exact(game: &Game, u_star: &[f64]) -> Result<OracleVerdict> {
    let n = game.num_players();
    if n > MAX_ORACLE_PLAYERS {
        return Err(Error::TooManyPlayers { found: n, limit: MAX_ORACLE_PLAYERS });
    }
    if u_star.len() != n {
        return Err(Error::DimensionMismatch { what: "utility vector", expected: n, found: u_star.len() });
    }
    let values: Vec<Objection> = (1..(1u64 << n))
        .into_par_iter()
        .map(|mask| coalition_value(game, u_star, &Coalition::from_mask(mask).expect("nonzero mask")))
        .collect::<Result<_>>()?;
    let checked = values.len();
    let best = values.into_iter().reduce(|a, b| if b.beats(&a) { b } else { a });
    Ok(OracleVerdict {
        blocked: best.as_ref().is_some_and(|o| o.epsilon > STRICT_TOL),
        best,
        coalitions_checked: checked,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoreEvidence {
    /// No sampled grand-coalition allocation survived, at this resolution.
    NoCorePointFound { resolution: f64, samples: usize },
    CorePointFound { plan: Vec<f64>, utilities: UtilityVector },
}

impl CoreEvidence {
    pub fn found(&self) -> bool {
        matches!(self, CoreEvidence::CorePointFound { .. })
    }
}

/// Samples `X(N)` on a grid whose step along good `j` is `resolution` times
/// the largest feasible amount of good `j`, keeps the Pareto-undominated
/// utility vectors and checks each one for blocking.
pub fn core_empty_evidence(game: &Game, resolution: f64) -> Result<CoreEvidence> {
    let (n, j) = (game.num_players(), game.num_goods());
    if n > MAX_EVIDENCE_PLAYERS {
        return Err(Error::TooManyPlayers { found: n, limit: MAX_EVIDENCE_PLAYERS });
    }
    if j > MAX_EVIDENCE_GOODS {
        return Err(Error::TooManyGoods { found: j, limit: MAX_EVIDENCE_GOODS });
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::BadInstance(format!("grid resolution {resolution} outside (0, 1]")));
    }
    let budget = game.pooled_endowment_f64(&game.grand())?;
    let x_n = game.design_space(&game.grand())?;
    let mut extent = Vec::with_capacity(j);
    for g in 0..j {
        let mut c = vec![0.0; j];
        c[g] = 1.0;
        let sol = lp::solve(&x_n.to_program(Direction::Maximize, c))?;
        extent.push(if sol.is_optimal() { sol.objective_value.max(0.0) } else { 0.0 });
    }
    let steps = (1.0 / resolution).round() as usize;
    let plans = grid_plans(game, &budget, &extent, steps);
    let samples: Vec<(Vec<f64>, UtilityVector)> = plans.into_iter().map(|x| {
        let u = game.utilities(&x);
        (x, u)
    }).collect();
    let frontier = pareto_filter(samples);
    let count = frontier.len();
    let verdicts: Vec<bool> = frontier
        .par_iter()
        .map(|(_, u)| is_blocked_exact(game, u).map(|v| v.blocked))
        .collect::<Result<_>>()?;
    match verdicts.iter().position(|&blocked| !blocked) {
        Some(k) => {
            let (plan, utilities) = frontier[k].clone();
            Ok(CoreEvidence::CorePointFound { plan, utilities })
        }
        None => Ok(CoreEvidence::NoCorePointFound { resolution, samples: count }),
    }
}

/// Grid points of `X(N)`, plus for each grid point of the leading goods the
/// point with the last good pushed as far as the budget allows.
fn grid_plans(game: &Game, budget: &[f64], extent: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let j = extent.len();
    let tol = lp::FEASIBILITY_TOL;
    let mut out = Vec::new();
    let mut idx = vec![0usize; j];
    loop {
        let x: Vec<f64> = idx.iter().zip(extent).map(|(&k, &e)| e * k as f64 / steps as f64).collect();
        if game.plan_fits(&x, budget, tol) {
            out.push(x.clone());
        }
        if idx[j - 1] == 0 {
            let mut pushed = x;
            let last = j - 1;
            let mut room = f64::INFINITY;
            let mut ok = true;
            for (row, &b) in game.a_f64().iter().zip(budget) {
                let used = lp::dot(row, &pushed);
                if row[last] > 0.0 {
                    room = room.min((b - used) / row[last]);
                } else if used > b + tol {
                    ok = false;
                }
            }
            if ok && room.is_finite() && room > tol {
                pushed[last] = room;
                out.push(pushed);
            }
        }
        // Odometer increment.
        let mut d = 0;
        loop {
            if d == j {
                return out;
            }
            idx[d] += 1;
            if idx[d] <= steps {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Drops samples whose utility vector is weakly dominated by another with
/// at least one strict improvement, and exact duplicates.
fn pareto_filter(samples: Vec<(Vec<f64>, UtilityVector)>) -> Vec<(Vec<f64>, UtilityVector)> {
    const EPS: f64 = 1e-12;
    let dominated = |a: &[f64], b: &[f64]| {
        b.iter().zip(a).all(|(y, x)| *y >= *x - EPS) && b.iter().zip(a).any(|(y, x)| *y > *x + EPS)
    };
    let mut keep: Vec<(Vec<f64>, UtilityVector)> = Vec::new();
    for (k, (x, u)) in samples.iter().enumerate() {
        if samples.iter().any(|(_, w)| dominated(u, w)) {
            continue;
        }
        let duplicate = samples[..k].iter().any(|(_, w)| w.iter().zip(u).all(|(a, b)| (a - b).abs() <= EPS));
        if !duplicate {
            keep.push((x.clone(), u.clone()));
        }
    }
    keep
}

/// A minimal balanced collection with its (unique) weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedCollection {
    pub coalitions: Vec<Coalition>,
    pub weights: Vec<f64>,
}

/// All minimal balanced collections on `n` players: collections with
/// linearly independent incidence vectors admitting strictly positive
/// weights that sum to one over every player's coalitions.
pub fn enumerate_balanced_collections(n: usize) -> Result<Vec<BalancedCollection>> {
    if n > MAX_BALANCED_PLAYERS {
        return Err(Error::TooManyPlayers { found: n, limit: MAX_BALANCED_PLAYERS });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let all: Vec<Coalition> = {
        let mut v: Vec<Coalition> = (1..(1u64 << n)).filter_map(Coalition::from_mask).collect();
        v.sort();
        v
    };
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    collect_balanced(&all, n, 0, &mut chosen, &mut out)?;
    out.sort_by(|a, b| a.coalitions.len().cmp(&b.coalitions.len()).then_with(|| a.coalitions.cmp(&b.coalitions)));
    Ok(out)
}

fn collect_balanced(
    all: &[Coalition],
    n: usize,
    from: usize,
    chosen: &mut Vec<usize>,
    out: &mut Vec<BalancedCollection>,
) -> Result<()> {
    if !chosen.is_empty() {
        let coalitions: Vec<Coalition> = chosen.iter().map(|&k| all[k].clone()).collect();
        if let Some(weights) = positive_weights(&coalitions, n)? {
            out.push(BalancedCollection { coalitions, weights });
        }
    }
    if chosen.len() == n {
        return Ok(());
    }
    for k in from..all.len() {
        chosen.push(k);
        let independent = rank(&chosen.iter().map(|&c| incidence(&all[c], n)).collect::<Vec<_>>()) == chosen.len();
        if independent {
            collect_balanced(all, n, k + 1, chosen, out)?;
        }
        chosen.pop();
    }
    Ok(())
}

fn incidence(s: &Coalition, n: usize) -> Vec<f64> {
    (0..n).map(|i| if s.contains(i) { 1.0 } else { 0.0 }).collect()
}

fn rank(vectors: &[Vec<f64>]) -> usize {
    let mut m: Vec<Vec<f64>> = vectors.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())) else {
            break;
        };
        if m[p][c].abs() < 1e-12 {
            continue;
        }
        m.swap(r, p);
        for k in 0..m.len() {
            if k != r {
                let f = m[k][c] / m[r][c];
                for col in 0..cols {
                    m[k][col] -= f * m[r][col];
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Weights `λ > 0` with `Σ_{S ∋ i} λ_S = 1` for every player, maximizing
/// the smallest weight.
fn positive_weights(coalitions: &[Coalition], n: usize) -> Result<Option<Vec<f64>>> {
    let c = coalitions.len();
    let mut objective = vec![0.0; c + 1];
    objective[c] = 1.0;
    let mut lp = LinearProgram::maximize(objective);
    lp.bounds[c] = Bounds::FREE;
    for i in 0..n {
        let mut row: Vec<f64> = coalitions.iter().map(|s| if s.contains(i) { 1.0 } else { 0.0 }).collect();
        row.push(0.0);
        lp.add_row(row, RowSense::Eq, 1.0);
    }
    for k in 0..c {
        let mut row = vec![0.0; c + 1];
        row[k] = -1.0;
        row[c] = 1.0;
        lp.add_row(row, RowSense::Le, 0.0);
    }
    let sol = lp::solve(&lp)?;
    Ok((sol.is_optimal() && sol.objective_value > STRICT_TOL).then(|| sol.x[..c].to_vec()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRecord {
    pub blocked: bool,
    pub epsilon: f64,
    pub coalition: String,
    pub coalitions_checked: usize,
}

impl From<&OracleVerdict> for VerdictRecord {
    fn from(v: &OracleVerdict) -> Self {
        Self {
            blocked: v.blocked,
            epsilon: v.epsilon(),
            coalition: v.best.as_ref().map(|o| o.coalition.label()).unwrap_or_default(),
            coalitions_checked: v.coalitions_checked,
        }
    }
}

pub fn write_verdicts(path: &Path, verdicts: &[VerdictRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for v in verdicts {
        w.serialize(v)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{int, ratio};

    fn empty_core() -> Game {
        Game::new(
            vec![vec![int(1), int(1)]],
            vec![vec![int(1)]; 3],
            vec![vec![ratio(2, 3), ratio(1, 3)], vec![ratio(2, 3), ratio(1, 3)], vec![ratio(-2, 3), ratio(1, 3)]],
        )
        .unwrap()
    }

    #[test]
    fn empty_core_blocking() {
        let g = empty_core();
        let v = is_blocked_exact(&g, &[2.0, 2.0, -2.0]).unwrap();
        assert!(v.blocked);
        assert_eq!(v.coalitions_checked, 7);
        let best = v.best.unwrap();
        assert_eq!(best.coalition, Coalition::singleton(2));
        assert!((best.epsilon - 7.0 / 3.0).abs() < 1e-9);

        let v = is_blocked_exact(&g, &[4.0 / 3.0, 4.0 / 3.0, 0.0]).unwrap();
        assert!(v.blocked);
        assert_eq!(v.best.unwrap().coalition, Coalition::singleton(2));
    }

    #[test]
    fn single_player_optimum_not_blocked() {
        let g = Game::new(vec![vec![int(1), int(1)]], vec![vec![int(2)]], vec![vec![int(1), int(3)]]).unwrap();
        let v = is_blocked_exact(&g, &[6.0]).unwrap();
        assert!(!v.blocked);
        assert!(matches!(core_empty_evidence(&g, 0.1).unwrap(), CoreEvidence::CorePointFound { .. }));
    }

    #[test]
    fn empty_core_has_no_grid_core_point() {
        let ev = core_empty_evidence(&empty_core(), 0.01).unwrap();
        match ev {
            CoreEvidence::NoCorePointFound { resolution, samples } => {
                assert_eq!(resolution, 0.01);
                assert!(samples > 50);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn symmetric_nonnegative_game_has_core_point() {
        let g = Game::new(vec![vec![int(1), int(1)]], vec![vec![int(1)]; 2], vec![vec![int(1), int(2)]; 2]).unwrap();
        assert!(core_empty_evidence(&g, 0.05).unwrap().found());
    }

    #[test]
    fn evidence_limits() {
        let g = Game::new(vec![vec![int(1)]], vec![vec![int(1)]; 5], vec![vec![int(1)]; 5]).unwrap();
        assert!(matches!(core_empty_evidence(&g, 0.1), Err(Error::TooManyPlayers { .. })));
    }

    #[test]
    fn balanced_collection_counts() {
        let two = enumerate_balanced_collections(2).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].coalitions, vec![Coalition::grand(2)]);
        assert_eq!(two[1].weights, vec![1.0, 1.0]);
        assert_eq!(enumerate_balanced_collections(3).unwrap().len(), 6);
        assert_eq!(enumerate_balanced_collections(4).unwrap().len(), 42);
        assert!(enumerate_balanced_collections(5).is_err());
    }

    #[test]
    fn pairs_collection_has_half_weights() {
        let three = enumerate_balanced_collections(3).unwrap();
        let pairs: Vec<Coalition> = [[0, 1], [0, 2], [1, 2]].iter().map(|p| Coalition::new(*p, 3).unwrap()).collect();
        let found = three.iter().find(|c| c.coalitions == pairs).expect("pairs collection");
        for w in &found.weights {
            assert!((w - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn partitions_are_balanced_with_unit_weights() {
        let four = enumerate_balanced_collections(4).unwrap();
        let parts = [vec![0b0011u64, 0b1100], vec![0b0001, 0b0010, 0b1100], vec![0b0001, 0b1110]];
        for p in parts {
            let mut coalitions: Vec<Coalition> = p.iter().map(|&m| Coalition::from_mask(m).unwrap()).collect();
            coalitions.sort();
            let found = four.iter().find(|c| c.coalitions == coalitions).expect("partition present");
            assert!(found.weights.iter().all(|w| (w - 1.0).abs() < 1e-9));
        }
    }
}
