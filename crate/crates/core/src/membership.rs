//! Least objections: how much the best-placed coalition can improve on an
//! incumbent utility vector.
//!
//! The additive least objection of `u*` is
//!
//! ```text
//! ε(u*) = max over S, x ∈ X(S) of min_{i ∈ S} (v^i·x − u*_i)
//! ```
//!
//! and `u*` is in the core exactly when `ε(u*) = 0`. The multiplicative
//! variant replaces the gain by the ratio `v^i·x / u*_i` and asks every
//! member to gain at least `floor` in absolute terms.
//!
//! The maximum over coalitions is found by branch-and-bound on binary
//! membership indicators `y`. Node relaxations keep `y` continuous and use
//! per-player big-M rows; players whose indicator has been fixed to one get
//! the plain row `ε <= v^i·x − u*_i`, and players fixed to zero are dropped.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Coalition, DesignPlan, Game};
use crate::lp::{self, Bounds, LinearProgram, RowSense};

/// Objections closer than this are treated as ties.
pub const TIE_TOL: f64 = 1e-9;
const DOMINANCE_TOL: f64 = 1e-9;
const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectionKind {
    Additive,
    Multiplicative,
}

impl ObjectionKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectionKind::Additive => "additive",
            ObjectionKind::Multiplicative => "multiplicative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectionMode {
    pub kind: ObjectionKind,
    /// Smallest gain that counts as an objection.
    pub floor: f64,
}

impl Default for ObjectionMode {
    fn default() -> Self {
        Self::additive()
    }
}

impl ObjectionMode {
    pub fn additive() -> Self {
        Self { kind: ObjectionKind::Additive, floor: 1e-3 }
    }

    pub fn multiplicative() -> Self {
        Self { kind: ObjectionKind::Multiplicative, floor: 1e-3 }
    }

    /// Objection value of the trivial objection (the grand coalition
    /// keeping `u*`).
    pub fn baseline(&self) -> f64 {
        match self.kind {
            ObjectionKind::Additive => 0.0,
            ObjectionKind::Multiplicative => 1.0,
        }
    }

    /// Whether an objection value is small enough to call `u*` a core point
    /// within tolerance `delta`.
    pub fn within(&self, epsilon: f64, delta: f64) -> bool {
        epsilon <= self.baseline() + delta
    }

    /// Core membership at the mode's own floor.
    pub fn accepts(&self, epsilon: f64) -> bool {
        self.within(epsilon, self.floor)
    }
}

/// A coalition, one of its plans, and the least gain it gives a member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objection {
    pub epsilon: f64,
    pub coalition: Coalition,
    pub plan: DesignPlan,
    /// Utilities of the members, in coalition order.
    pub utilities: Vec<f64>,
}

impl Objection {
    /// Total order used to merge candidates: larger `epsilon` first (ties
    /// within `TIE_TOL`), then the lexicographically smaller coalition.
    pub fn beats(&self, other: &Objection) -> bool {
        if self.epsilon > other.epsilon + TIE_TOL {
            return true;
        }
        if other.epsilon > self.epsilon + TIE_TOL {
            return false;
        }
        self.coalition < other.coalition
    }

    /// Whether every member gains strictly more than `threshold`.
    pub fn improves_all(&self, u_star: &[f64], threshold: f64) -> bool {
        self.coalition.members().iter().zip(&self.utilities).all(|(&i, &u)| u - u_star[i] > threshold)
    }
}

fn best_of(candidates: impl IntoIterator<Item = Objection>) -> Option<Objection> {
    candidates.into_iter().fold(None, |best, c| match best {
        Some(b) if !c.beats(&b) => Some(b),
        _ => Some(c),
    })
}

/// Coalitions that blocked earlier iterates, with their last objection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoalitionPool {
    entries: BTreeMap<Coalition, f64>,
}

impl CoalitionPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, coalition: Coalition, epsilon: f64) {
        self.entries.insert(coalition, epsilon);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, coalition: &Coalition) -> bool {
        self.entries.contains_key(coalition)
    }

    pub fn last_epsilon(&self, coalition: &Coalition) -> Option<f64> {
        self.entries.get(coalition).copied()
    }

    pub fn coalitions(&self) -> impl Iterator<Item = &Coalition> {
        self.entries.keys()
    }
}

/// Limits on a branch-and-bound search. The node limit makes truncated
/// searches reproducible; the time limit does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub time: Duration,
    pub node_limit: Option<u64>,
}

impl Default for Budget {
    fn default() -> Self {
        Self { time: Duration::from_secs(300), node_limit: None }
    }
}

impl Budget {
    pub fn nodes(limit: u64) -> Self {
        Self { time: Duration::from_secs(3600), node_limit: Some(limit) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipResult {
    pub objection: Objection,
    pub mode: ObjectionMode,
    /// Branch-and-bound nodes solved.
    pub nodes: u64,
    /// The budget ran out; `objection.epsilon` is only a lower bound.
    pub timed_out: bool,
    pub wall_time: Duration,
}

impl MembershipResult {
    pub fn epsilon(&self) -> f64 {
        self.objection.epsilon
    }

    pub fn in_core(&self) -> bool {
        self.mode.accepts(self.objection.epsilon)
    }

    pub fn record(&self) -> MembershipRecord {
        MembershipRecord {
            epsilon: self.objection.epsilon,
            mode: self.mode.kind.name().to_string(),
            coalition: self.objection.coalition.label(),
            nodes: self.nodes,
            timed_out: self.timed_out,
        }
    }
}

/// One CSV row per membership call. Wall time is kept out so that reruns
/// produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipRecord {
    pub epsilon: f64,
    pub mode: String,
    pub coalition: String,
    pub nodes: u64,
    pub timed_out: bool,
}

pub fn write_records(path: &Path, records: &[MembershipRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Cached utility ranges used by the big-M rows.
#[derive(Debug, Clone)]
pub struct Membership<'g> {
    game: &'g Game,
    /// `(min, max)` of `v^i·x` over every plan any coalition can build.
    ranges: Vec<(f64, f64)>,
}

impl<'g> Membership<'g> {
    pub fn new(game: &'g Game) -> Result<Self> {
        let ranges = game.utility_range(&game.positive_budget())?;
        Ok(Self { game, ranges })
    }

    pub fn game(&self) -> &'g Game {
        self.game
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    fn check_incumbent(&self, u_star: &[f64], mode: ObjectionMode) -> Result<()> {
        let n = self.game.num_players();
        if u_star.len() != n {
            return Err(Error::DimensionMismatch { what: "utility vector", expected: n, found: u_star.len() });
        }
        if mode.kind == ObjectionKind::Multiplicative {
            if let Some((player, &value)) = u_star.iter().enumerate().find(|(_, &u)| u <= 0.0) {
                return Err(Error::NonPositiveIncumbentUtility { player, value });
            }
        }
        Ok(())
    }

    /// The best objection of one fixed coalition, or `None` when no plan
    /// gives every member at least the floor (multiplicative mode only).
    pub fn evaluate_coalition(&self, u_star: &[f64], mode: ObjectionMode, s: &Coalition) -> Result<Option<Objection>> {
        self.check_incumbent(u_star, mode)?;
        let game = self.game;
        let j = game.num_goods();
        let budget = game.pooled_endowment_f64(s)?;
        let mut objective = vec![0.0; j + 1];
        objective[j] = 1.0;
        let mut lp = LinearProgram::maximize(objective);
        lp.bounds[j] = Bounds::FREE;
        for (row, &b) in game.a_f64().iter().zip(&budget) {
            let mut c = row.clone();
            c.push(0.0);
            lp.add_row(c, RowSense::Le, b);
        }
        for &i in s.members() {
            let (row, rhs) = fixed_in_row(game.v_f64(i), u_star[i], mode);
            lp.add_row(row, RowSense::Le, rhs);
            if mode.kind == ObjectionKind::Multiplicative {
                let mut c = game.v_f64(i).to_vec();
                c.push(0.0);
                lp.add_row(c, RowSense::Ge, u_star[i] + mode.floor);
            }
        }
        let sol = lp::solve(&lp)?;
        if !sol.is_optimal() {
            return Ok(None);
        }
        let plan: Vec<f64> = sol.x[..j].iter().map(|&x| x.max(0.0)).collect();
        Ok(Some(self.objection_for(u_star, mode, s.clone(), plan)))
    }

    /// Objection of coalition `s` using `plan`, with `epsilon` recomputed
    /// from the plan.
    fn objection_for(&self, u_star: &[f64], mode: ObjectionMode, s: Coalition, plan: DesignPlan) -> Objection {
        let utilities: Vec<f64> = s.members().iter().map(|&i| lp::dot(self.game.v_f64(i), &plan)).collect();
        let epsilon = s
            .members()
            .iter()
            .zip(&utilities)
            .map(|(&i, &u)| match mode.kind {
                ObjectionKind::Additive => u - u_star[i],
                ObjectionKind::Multiplicative => u / u_star[i],
            })
            .fold(f64::INFINITY, f64::min);
        Objection { epsilon, coalition: s, plan, utilities }
    }

    /// The trivial objection: the grand coalition keeps `u*`.
    fn baseline(&self, u_star: &[f64], mode: ObjectionMode) -> Result<Objection> {
        let grand = self.game.grand();
        let plan = match self.evaluate_coalition(u_star, ObjectionMode { kind: ObjectionKind::Additive, ..mode }, &grand)? {
            Some(o) => o.plan,
            None => vec![0.0; self.game.num_goods()],
        };
        Ok(Objection { epsilon: mode.baseline(), coalition: grand, plan, utilities: u_star.to_vec() })
    }

    /// Improves `start` by flipping one player in or out, or swapping a
    /// member for a non-member, while that beats the current objection.
    fn local_search(&self, u_star: &[f64], mode: ObjectionMode, start: Objection) -> Result<Objection> {
        let n = self.game.num_players();
        let mut current = start;
        loop {
            let members = current.coalition.members().to_vec();
            let outside: Vec<usize> = (0..n).filter(|p| !members.contains(p)).collect();
            let flips = (0..n).map(|p| {
                if members.contains(&p) {
                    members.iter().copied().filter(|&i| i != p).collect()
                } else {
                    members.iter().copied().chain([p]).collect::<Vec<_>>()
                }
            });
            let swaps = members.iter().flat_map(|&out| {
                outside.iter().map(move |&inn| (out, inn))
            });
            let flips: Vec<Vec<usize>> = flips.collect();
            let swaps: Vec<Vec<usize>> = swaps
                .map(|(out, inn)| members.iter().copied().filter(|&i| i != out).chain([inn]).collect())
                .collect();
            let mut improved = false;
            for moves in [flips, swaps] {
                let neighbours: Vec<Coalition> = moves.into_iter().filter_map(|m| Coalition::new(m, n).ok()).collect();
                let evaluated: Vec<Option<Objection>> =
                    neighbours.par_iter().map(|s| self.evaluate_coalition(u_star, mode, s)).collect::<Result<_>>()?;
                if let Some(best) = best_of(evaluated.into_iter().flatten()) {
                    if best.epsilon > current.epsilon + TIE_TOL {
                        current = best;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                return Ok(current);
            }
        }
    }

    /// Exact least objection by branch-and-bound, seeded with the pool and
    /// the prefix heuristic.
    pub fn least_objection(
        &self,
        u_star: &[f64],
        mode: ObjectionMode,
        pool: &CoalitionPool,
        budget: Budget,
    ) -> Result<MembershipResult> {
        let start = Instant::now();
        self.check_incumbent(u_star, mode)?;
        let mut seeds: Vec<Coalition> = vec![self.game.grand()];
        seeds.extend(pool.coalitions().cloned());
        seeds.extend(prefix_heuristic(self.game, u_star));
        seeds.sort();
        seeds.dedup();
        let evaluated: Vec<Option<Objection>> = seeds
            .par_iter()
            .map(|s| self.evaluate_coalition(u_star, mode, s))
            .collect::<Result<_>>()?;
        let mut candidates = vec![self.baseline(u_star, mode)?];
        candidates.extend(evaluated.into_iter().flatten());
        let incumbent = self.local_search(u_star, mode, best_of(candidates).expect("baseline present"))?;

        let (joins, leaves) = join_relation(self.game, u_star, mode)?;
        let mut search = Search {
            joins,
            leaves,
            owner: self,
            u_star,
            mode,
            incumbent,
            nodes: 0,
            start,
            budget,
            timed_out: false,
        };
        search.run()?;
        Ok(MembershipResult {
            objection: search.incumbent,
            mode,
            nodes: search.nodes,
            timed_out: search.timed_out,
            wall_time: start.elapsed(),
        })
    }
}

/// `ε − v^i·x <= −u*_i` (additive) or `ε − v^i·x / u*_i <= 0`
/// (multiplicative), over `(x, ε)`.
fn fixed_in_row(v: &[f64], u: f64, mode: ObjectionMode) -> (Vec<f64>, f64) {
    let scale = match mode.kind {
        ObjectionKind::Additive => 1.0,
        ObjectionKind::Multiplicative => 1.0 / u,
    };
    let mut c: Vec<f64> = v.iter().map(|&a| -a * scale).collect();
    c.push(1.0);
    let rhs = match mode.kind {
        ObjectionKind::Additive => -u,
        ObjectionKind::Multiplicative => 0.0,
    };
    (c, rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fix {
    Free,
    In,
    Out,
}

struct Search<'a, 'g> {
    owner: &'a Membership<'g>,
    u_star: &'a [f64],
    mode: ObjectionMode,
    incumbent: Objection,
    nodes: u64,
    start: Instant,
    budget: Budget,
    timed_out: bool,
    /// `joins[i]`: players who can be added whenever `i` is a member without
    /// lowering the objection. `leaves` is the converse relation.
    joins: Vec<Vec<usize>>,
    leaves: Vec<Vec<usize>>,
}

/// Fixes `player` and everyone implied by it; false on a contradiction.
fn fix_closed(fixes: &mut [Fix], player: usize, to: Fix, implied: &[Vec<usize>]) -> bool {
    fixes[player] = to;
    for &other in &implied[player] {
        match fixes[other] {
            Fix::Free => fixes[other] = to,
            f if f != to => return false,
            _ => {}
        }
    }
    true
}

/// Player `b` joins any coalition containing `a` without lowering its
/// objection when `b` brings no negative endowment and gains at least as
/// much as `a` from every plan in `X⁺`.
fn join_relation(game: &Game, u_star: &[f64], mode: ObjectionMode) -> Result<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
    let n = game.num_players();
    let budget = game.positive_budget();
    let mut joins = vec![Vec::new(); n];
    let mut leaves = vec![Vec::new(); n];
    for a in 0..n {
        for b in 0..n {
            if a == b || game.b_f64(b).iter().any(|&x| x < 0.0) || !dominates(game, &budget, u_star, mode, b, a)? {
                continue;
            }
            joins[a].push(b);
            leaves[b].push(a);
        }
    }
    Ok((joins, leaves))
}

/// Whether `b`'s gain is at least `a`'s at every plan of the positive budget.
fn dominates(game: &Game, budget: &[f64], u_star: &[f64], mode: ObjectionMode, b: usize, a: usize) -> Result<bool> {
    let (vb, va) = (game.v_f64(b), game.v_f64(a));
    if vb == va {
        return Ok(match mode.kind {
            ObjectionKind::Additive => u_star[b] <= u_star[a],
            ObjectionKind::Multiplicative => u_star[b] == u_star[a],
        });
    }
    // Both sides are linear in the plan: min over X⁺ of gain_b − gain_a.
    let (diff, need): (Vec<f64>, f64) = match mode.kind {
        ObjectionKind::Additive => (vb.iter().zip(va).map(|(p, q)| p - q).collect(), u_star[b] - u_star[a]),
        ObjectionKind::Multiplicative => {
            // `b`'s floor row follows from `a`'s only when `u*_b >= u*_a`.
            if u_star[b] < u_star[a] {
                return Ok(false);
            }
            (vb.iter().zip(va).map(|(p, q)| p / u_star[b] - q / u_star[a]).collect(), 0.0)
        }
    };
    if diff.iter().all(|&d| d >= 0.0) {
        return Ok(need <= 0.0);
    }
    if need > -DOMINANCE_TOL {
        return Ok(false);
    }
    let mut program = LinearProgram::minimize(diff);
    for (row, &cap) in game.a_f64().iter().zip(budget) {
        program.add_row(row.clone(), RowSense::Le, cap);
    }
    let sol = lp::solve(&program)?;
    Ok(sol.is_optimal() && sol.objective_value >= need + DOMINANCE_TOL)
}

struct Node {
    bound: f64,
    depth: usize,
    inside: bool,
    seq: u64,
    fixes: Vec<Fix>,
}

impl Node {
    fn key(&self) -> (f64, usize, bool, std::cmp::Reverse<u64>) {
        (self.bound, self.depth, self.inside, std::cmp::Reverse(self.seq))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3))
    }
}

enum NodeOutcome {
    Pruned,
    Leaf(Coalition),
    /// Branch on a player; children inherit the node's bound.
    Branch(usize, f64),
}

impl Search<'_, '_> {
    /// Best-first search on the parent bound; ties go to deeper nodes, then
    /// to the `y_i = 1` child, then to the earlier node.
    fn run(&mut self) -> Result<()> {
        let n = self.owner.game.num_players();
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        heap.push(Node { bound: f64::INFINITY, depth: 0, inside: true, seq, fixes: vec![Fix::Free; n] });
        while let Some(Node { bound, mut fixes, .. }) = heap.pop() {
            if bound <= self.incumbent.epsilon + TIE_TOL {
                break;
            }
            if self.out_of_budget() {
                self.timed_out = true;
                break;
            }
            match self.solve_node(&mut fixes, bound)? {
                NodeOutcome::Pruned => {}
                NodeOutcome::Leaf(s) => {
                    if let Some(o) = self.owner.evaluate_coalition(self.u_star, self.mode, &s)? {
                        if o.beats(&self.incumbent) {
                            self.incumbent = self.owner.local_search(self.u_star, self.mode, o)?;
                        }
                    }
                }
                NodeOutcome::Branch(i, value) => {
                    let depth = fixes.iter().filter(|&&f| f != Fix::Free).count();
                    let mut out = fixes.clone();
                    let mut inn = fixes;
                    for (child, to, implied) in [(&mut out, Fix::Out, &self.leaves), (&mut inn, Fix::In, &self.joins)] {
                        if fix_closed(child, i, to, implied) {
                            seq += 1;
                            let fixes = std::mem::take(child);
                            heap.push(Node { bound: value, depth, inside: to == Fix::In, seq, fixes });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn out_of_budget(&self) -> bool {
        self.budget.node_limit.is_some_and(|limit| self.nodes >= limit) || self.start.elapsed() >= self.budget.time
    }

    /// Solves the relaxation of a node. `bound` is the parent's value; free
    /// players who cannot beat the incumbent are fixed out in place.
    fn solve_node(&mut self, fixes: &mut [Fix], bound: f64) -> Result<NodeOutcome> {
        self.nodes += 1;
        let game = self.owner.game;
        let j = game.num_goods();
        let mult = self.mode.kind == ObjectionKind::Multiplicative;
        let u = self.u_star;
        let ranges = &self.owner.ranges;
        let scaled = |i: usize, value: f64| if mult { value / u[i] } else { value - u[i] };
        for (i, f) in fixes.iter_mut().enumerate() {
            if *f == Fix::Free && scaled(i, ranges[i].1) <= self.incumbent.epsilon + TIE_TOL {
                *f = Fix::Out;
            }
        }
        let free: Vec<usize> = (0..fixes.len()).filter(|&i| fixes[i] == Fix::Free).collect();
        let fixed_in: Vec<usize> = (0..fixes.len()).filter(|&i| fixes[i] == Fix::In).collect();
        if free.is_empty() {
            return Ok(match Coalition::new(fixed_in, fixes.len()) {
                Ok(s) => NodeOutcome::Leaf(s),
                Err(_) => NodeOutcome::Pruned,
            });
        }

        // Objection values below the node lie in [lo, hi]: no member gains
        // more than its range allows, and fixed-in members cap everybody.
        let cap = |players: &[usize], init: f64, pick: fn(f64, f64) -> f64| {
            players.iter().map(|&i| scaled(i, ranges[i].1)).fold(init, pick)
        };
        let mut hi = cap(&free, f64::NEG_INFINITY, f64::max).max(cap(&fixed_in, f64::NEG_INFINITY, f64::max));
        if !fixed_in.is_empty() {
            hi = hi.min(cap(&fixed_in, f64::INFINITY, f64::min));
        }
        hi = hi.min(bound);
        let lo = (0..u.len()).map(|i| scaled(i, ranges[i].0)).fold(f64::INFINITY, f64::min);
        if hi <= self.incumbent.epsilon + TIE_TOL {
            return Ok(NodeOutcome::Pruned);
        }

        let sol = lp::solve(&self.node_program(&free, &fixed_in, lo, hi))?;
        if !sol.is_optimal() || sol.objective_value <= self.incumbent.epsilon + TIE_TOL {
            return Ok(NodeOutcome::Pruned);
        }
        let yv = |p: usize| j + 1 + p;
        let mut branch: Option<(usize, f64)> = None;
        for (p, &i) in free.iter().enumerate() {
            let y = sol.x[yv(p)];
            if y > INTEGRALITY_TOL && y < 1.0 - INTEGRALITY_TOL && branch.is_none_or(|(_, best)| y > best) {
                branch = Some((i, y));
            }
        }
        if let Some((i, _)) = branch {
            return Ok(NodeOutcome::Branch(i, sol.objective_value));
        }
        let members = fixed_in.iter().copied().chain(free.iter().enumerate().filter(|(p, _)| sol.x[yv(*p)] > 0.5).map(|(_, &i)| i));
        Ok(match Coalition::new(members, fixes.len()) {
            Ok(s) => NodeOutcome::Leaf(s),
            Err(_) => NodeOutcome::Pruned,
        })
    }

    /// Relaxation over `(x, ε, y_free)` with `lo <= ε <= hi`.
    fn node_program(&self, free: &[usize], fixed_in: &[usize], lo: f64, hi: f64) -> LinearProgram {
        let game = self.owner.game;
        let (j, k) = (game.num_goods(), game.num_resources());
        let mult = self.mode.kind == ObjectionKind::Multiplicative;
        let u = self.u_star;
        let ranges = &self.owner.ranges;
        let nv = j + 1 + free.len();
        let eps = j;
        let yv = |p: usize| j + 1 + p;
        let mut objective = vec![0.0; nv];
        objective[eps] = 1.0;
        let mut lp = LinearProgram::maximize(objective);
        lp.bounds[eps] = Bounds::new(lo.min(hi), hi);
        for p in 0..free.len() {
            lp.bounds[yv(p)] = Bounds::new(0.0, 1.0);
        }
        if fixed_in.is_empty() {
            let mut c = vec![0.0; nv];
            for p in 0..free.len() {
                c[yv(p)] = 1.0;
            }
            lp.add_row(c, RowSense::Ge, 1.0);
        }
        for r in 0..k {
            let mut c = vec![0.0; nv];
            c[..j].copy_from_slice(&game.a_f64()[r]);
            for (p, &i) in free.iter().enumerate() {
                c[yv(p)] = -game.b_f64(i)[r];
            }
            let rhs: f64 = fixed_in.iter().map(|&i| game.b_f64(i)[r]).sum();
            lp.add_row(c, RowSense::Le, rhs);
        }
        for &i in fixed_in {
            let (mut c, rhs) = fixed_in_row(game.v_f64(i), u[i], self.mode);
            c.resize(nv, 0.0);
            lp.add_row(c, RowSense::Le, rhs);
            if mult {
                let mut c = vec![0.0; nv];
                c[..j].copy_from_slice(game.v_f64(i));
                lp.add_row(c, RowSense::Ge, u[i] + self.mode.floor);
            }
        }
        for (p, &i) in free.iter().enumerate() {
            let (lower_i, _) = ranges[i];
            // With y_i = 0 the row must hold for any plan and any ε <= hi.
            let weight = if mult { 1.0 / u[i] } else { 1.0 };
            let big_m = (hi - weight * lower_i).max(0.0);
            let (mut c, rhs) = fixed_in_row(game.v_f64(i), u[i], self.mode);
            c.resize(nv, 0.0);
            // ε − v·x/s + (M + rhs_shift) y <= M, where the fixed-in rhs is −u
            // (additive) or 0 (multiplicative).
            c[yv(p)] = big_m - rhs;
            lp.add_row(c, RowSense::Le, big_m);
            if mult {
                let mut c = vec![0.0; nv];
                c[..j].copy_from_slice(game.v_f64(i));
                c[yv(p)] = -(u[i] + self.mode.floor - lower_i);
                lp.add_row(c, RowSense::Ge, lower_i);
            }
        }

        lp
    }
}

/// Convenience wrapper around [`Membership::least_objection`].
pub fn least_objection(
    game: &Game,
    u_star: &[f64],
    mode: ObjectionMode,
    pool: &CoalitionPool,
    budget: Budget,
) -> Result<MembershipResult> {
    Membership::new(game)?.least_objection(u_star, mode, pool, budget)
}

/// For each good, rank players by their valuation of it and scan the
/// prefixes of that ranking with the whole pooled budget spent on the good.
/// Returns the best prefix per good whose additive objection is
/// nonnegative, without duplicates.
pub fn prefix_heuristic(game: &Game, u_star: &[f64]) -> Vec<Coalition> {
    let n = game.num_players();
    let mut out: Vec<Coalition> = Vec::new();
    for good in 0..game.num_goods() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let (va, vb) = (game.v_f64(a)[good], game.v_f64(b)[good]);
            vb.total_cmp(&va).then(u_star[a].total_cmp(&u_star[b])).then(a.cmp(&b))
        });
        let mut budget = vec![0.0; game.num_resources()];
        let mut best: Option<(f64, usize)> = None;
        for (k, &i) in order.iter().enumerate() {
            for (t, b) in budget.iter_mut().zip(game.b_f64(i)) {
                *t += b;
            }
            let Some(level) = dedicated_level(game, good, &budget) else {
                continue;
            };
            let gain = order[..=k]
                .iter()
                .map(|&p| game.v_f64(p)[good] * level - u_star[p])
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(g, _)| gain > g + TIE_TOL) {
                best = Some((gain, k));
            }
        }
        if let Some((gain, k)) = best {
            if gain >= 0.0 {
                let s = Coalition::new(order[..=k].iter().copied(), n).expect("nonempty prefix");
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// Largest amount of `good` alone that fits in `budget`, if any.
fn dedicated_level(game: &Game, good: usize, budget: &[f64]) -> Option<f64> {
    let mut hi = f64::INFINITY;
    let mut lo: f64 = 0.0;
    for (row, &b) in game.a_f64().iter().zip(budget) {
        let a = row[good];
        if a > 0.0 {
            hi = hi.min(b / a);
        } else if a < 0.0 {
            lo = lo.max(b / a);
        } else if b < 0.0 {
            return None;
        }
    }
    (hi.is_finite() && hi >= lo - lp::FEASIBILITY_TOL).then_some(hi.max(0.0))
}

/// Stand-alone optimum `max{v^i·x : x ∈ X({i})}` of every player.
pub fn singleton_lower_bounds(game: &Game) -> Result<Vec<f64>> {
    (0..game.num_players()).map(|i| Ok(game.best_plan(i, &Coalition::singleton(i))?.1)).collect()
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

    /// Objection of every coalition by one LP each.
    fn brute_force(game: &Game, u: &[f64], mode: ObjectionMode) -> f64 {
        let m = Membership::new(game).unwrap();
        let n = game.num_players();
        let mut best = mode.baseline();
        for mask in 1..(1u64 << n) {
            let s = Coalition::from_mask(mask).unwrap();
            if let Some(o) = m.evaluate_coalition(u, mode, &s).unwrap() {
                best = best.max(o.epsilon);
            }
        }
        best
    }

    #[test]
    fn empty_core_example_objection() {
        let g = empty_core();
        let u = [2.0, 2.0, -2.0];
        let r = least_objection(&g, &u, ObjectionMode::additive(), &CoalitionPool::new(), Budget::default()).unwrap();
        assert!((r.epsilon() - 7.0 / 3.0).abs() < 1e-9, "{}", r.epsilon());
        assert_eq!(r.objection.coalition, Coalition::singleton(2));
        assert!(!r.timed_out);
        assert!(!r.in_core());
    }

    #[test]
    fn single_player_optimum_is_unblocked() {
        let g = Game::new(vec![vec![int(1), int(2)]], vec![vec![int(4)]], vec![vec![int(1), int(3)]]).unwrap();
        let best = singleton_lower_bounds(&g).unwrap()[0];
        assert!((best - 6.0).abs() < 1e-9);
        let r = least_objection(&g, &[best], ObjectionMode::additive(), &CoalitionPool::new(), Budget::default()).unwrap();
        assert!(r.epsilon().abs() < 1e-9);
        assert!(r.in_core());
    }

    #[test]
    fn matches_brute_force_on_empty_core_grid() {
        let g = empty_core();
        for x1 in [0.0, 0.5, 1.5, 3.0] {
            let x = [x1, 3.0 - x1];
            let u = g.utilities(&x);
            let r = least_objection(&g, &u, ObjectionMode::additive(), &CoalitionPool::new(), Budget::default()).unwrap();
            let expected = brute_force(&g, &u, ObjectionMode::additive());
            assert!((r.epsilon() - expected).abs() < 1e-7, "x = {x:?}: {} vs {expected}", r.epsilon());
        }
    }

    #[test]
    fn multiplicative_requires_positive_incumbent() {
        let g = empty_core();
        let err = least_objection(&g, &[1.0, 1.0, 0.0], ObjectionMode::multiplicative(), &CoalitionPool::new(), Budget::default());
        assert!(matches!(err, Err(Error::NonPositiveIncumbentUtility { player: 2, .. })));
    }

    #[test]
    fn multiplicative_matches_brute_force() {
        let g = Game::new(
            vec![vec![int(2), int(1)]],
            vec![vec![int(1)]; 3],
            vec![vec![int(1), int(0)], vec![ratio(1, 2), int(1)], vec![ratio(1, 2), int(1)]],
        )
        .unwrap();
        let u = [0.4, 1.0, 1.2];
        let mode = ObjectionMode::multiplicative();
        let r = least_objection(&g, &u, mode, &CoalitionPool::new(), Budget::default()).unwrap();
        let expected = brute_force(&g, &u, mode);
        assert!((r.epsilon() - expected).abs() < 1e-7, "{} vs {expected}", r.epsilon());
        assert!(r.objection.improves_all(&u, mode.floor - 1e-9));
    }

    #[test]
    fn prefix_heuristic_examples() {
        let g = empty_core();
        // Good 1 only reaches a zero gain with everyone; good 2 gives {3}.
        assert_eq!(prefix_heuristic(&g, &[2.0, 2.0, -2.0]), vec![Coalition::grand(3), Coalition::singleton(2)]);

        let sym = Game::new(vec![vec![int(1)]], vec![vec![int(1)]; 2], vec![vec![int(1)]; 2]).unwrap();
        let grand = Coalition::grand(2);
        // Alone each gets 1; together both get 2.
        assert_eq!(prefix_heuristic(&sym, &[1.0, 1.0]), vec![grand]);
        assert!(prefix_heuristic(&sym, &[5.0, 5.0]).is_empty());
    }

    #[test]
    fn singleton_bounds_examples() {
        let toy = Game::new(vec![vec![int(2), int(1)]], vec![vec![int(1)]], vec![vec![ratio(1, 2), int(1)]]).unwrap();
        assert!((singleton_lower_bounds(&toy).unwrap()[0] - 1.0).abs() < 1e-12);
        let lb = singleton_lower_bounds(&empty_core()).unwrap();
        assert!((lb[2] - 1.0 / 3.0).abs() < 1e-12);
        let zero = Game::new(vec![vec![int(1)]], vec![vec![int(1)]], vec![vec![int(0)]]).unwrap();
        assert_eq!(singleton_lower_bounds(&zero).unwrap(), vec![0.0]);
    }

    #[test]
    fn pool_deduplicates_and_updates() {
        let mut pool = CoalitionPool::new();
        pool.insert(Coalition::singleton(1), 0.5);
        pool.insert(Coalition::singleton(1), 0.25);
        pool.insert(Coalition::grand(2), 0.1);
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.last_epsilon(&Coalition::singleton(1)), Some(0.25));
    }

    #[test]
    fn node_limit_flags_truncation() {
        let g = empty_core();
        let u = [0.0, 0.0, -5.0];
        let r = least_objection(&g, &u, ObjectionMode::additive(), &CoalitionPool::new(), Budget::nodes(0)).unwrap();
        assert!(r.timed_out);
        assert_eq!(r.nodes, 0);
    }

    #[test]
    fn records_serialize_without_wall_time() {
        let g = empty_core();
        let r = least_objection(&g, &[2.0, 2.0, -2.0], ObjectionMode::additive(), &CoalitionPool::new(), Budget::default())
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_records(&path, &[r.record()]).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("epsilon,mode,coalition,nodes,timed_out\n"));
        assert!(text.contains(",additive,3,"));
    }
}
