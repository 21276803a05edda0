//! Cutting-plane optimization of a welfare objective over the core.
//!
//! The master LP starts from the grand coalition's design-utility space with
//! individual rationality and utility caps as bounds. Each round solves the
//! master, asks the membership search for the worst objection to the
//! master's utilities and, while some coalition still objects, adds
//! intersection cuts for it and for pooled coalitions that still object.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cuts::{self, CutLogRecord, CutOrigin, CutRecord, FilterDecision};
use crate::error::{Error, Result};
use crate::game::{Coalition, ConstraintSystem, DesignPlan, Game, UtilityVector};
use crate::lp::{self, BasicSolution, Bounds, Direction, LinearProgram, LpError, RowSense, Status};
use crate::membership::{self, Budget, CoalitionPool, Membership, ObjectionMode, TIE_TOL};

pub const DEFAULT_SECONDARY_WEIGHT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Utilitarian,
    Maximin { secondary_weight: f64 },
    /// Weights over `(x, u)`.
    CustomLinear(Vec<f64>),
}

impl Objective {
    pub fn maximin() -> Self {
        Objective::Maximin { secondary_weight: DEFAULT_SECONDARY_WEIGHT }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::Utilitarian => "utilitarian",
            Objective::Maximin { .. } => "maximin",
            Objective::CustomLinear(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WelfareKind {
    Utilitarian,
    Maximin,
}

pub fn welfare(u: &[f64], kind: WelfareKind) -> f64 {
    match kind {
        WelfareKind::Utilitarian => u.iter().sum(),
        WelfareKind::Maximin => u.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub objective: Objective,
    /// Objections up to this much above the baseline count as core points.
    pub delta: f64,
    pub max_iterations: usize,
    pub membership_budget: Budget,
    pub mode: ObjectionMode,
    /// Bound every utility below by the player's stand-alone optimum.
    pub individual_rationality: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            objective: Objective::Utilitarian,
            delta: 1e-3,
            max_iterations: 100,
            membership_budget: Budget::default(),
            mode: ObjectionMode::additive(),
            individual_rationality: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    /// No coalition objects by more than `delta`.
    Converged,
    /// No objection above `delta` was found, but the membership search hit
    /// its budget, so convergence is not certified.
    Unverified,
    IterationCap,
    /// The relaxation became empty: evidence (not proof) of an empty core.
    RelaxationInfeasible,
    /// Some coalition objects but no cut was deep enough to add.
    Stalled,
    /// An LP basis became too ill-conditioned to continue.
    NumericalBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub utilitarian: f64,
    pub maximin: f64,
    pub epsilon: f64,
    pub coalition_size: usize,
    pub cuts_added: usize,
    pub condition: f64,
    pub nodes: u64,
    pub timed_out: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    /// Seconds per iteration, kept apart from the records so that the
    /// trajectory file is reproducible.
    pub wall_times: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.epsilon).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Vec<IterationRecord>> {
        let mut r = csv::Reader::from_path(path)?;
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }

    pub fn write_timings(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iteration", "seconds"])?;
        for (k, t) in self.wall_times.iter().enumerate() {
            w.write_record([k.to_string(), format!("{t:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: RunStatus,
    pub plan: DesignPlan,
    pub utilities: UtilityVector,
    /// Last least objection against `utilities`.
    pub epsilon: f64,
    pub trajectory: Trajectory,
    pub cut_log: Vec<CutLogRecord>,
    /// Every accepted cut, in the order added.
    pub cuts: Vec<CutRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionJson {
    pub status: RunStatus,
    pub objective: String,
    pub iterations: usize,
    pub epsilon: f64,
    pub plan: Vec<f64>,
    pub utilities: Vec<f64>,
    pub utilitarian: f64,
    pub maximin: f64,
}

impl SolveOutcome {
    pub fn to_json(&self, config: &RunConfig) -> SolutionJson {
        SolutionJson {
            status: self.status,
            objective: config.objective.name().to_string(),
            iterations: self.trajectory.len(),
            epsilon: self.epsilon,
            plan: self.plan.clone(),
            utilities: self.utilities.clone(),
            utilitarian: welfare(&self.utilities, WelfareKind::Utilitarian),
            maximin: welfare(&self.utilities, WelfareKind::Maximin),
        }
    }
}

/// The grand coalition's design-utility space extended by `w <= u_i`, with
/// the objective `w + secondary_weight · Σ u_i`.
pub fn maximin_extension(game: &Game, secondary_weight: f64) -> Result<(ConstraintSystem, Vec<f64>)> {
    let (j, n) = (game.num_goods(), game.num_players());
    let z = game.design_utility_space(&game.grand())?;
    let total = j + n + 1;
    let ranges = game.utility_range(&game.pooled_endowment_f64(&game.grand())?)?;
    let mut bounds = z.bounds.clone();
    let lo = ranges.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let hi = ranges.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    bounds.push(Bounds::new(lo, hi));
    let mut sys = ConstraintSystem::new(bounds);
    for row in &z.rows {
        let mut c = row.coefficients.clone();
        c.push(0.0);
        sys.add_row(c, row.sense, row.rhs);
    }
    for i in 0..n {
        let mut c = vec![0.0; total];
        c[j + n] = 1.0;
        c[j + i] = -1.0;
        sys.add_row(c, RowSense::Le, 0.0);
    }
    let mut objective = vec![0.0; total];
    for o in &mut objective[j..j + n] {
        *o = secondary_weight;
    }
    objective[j + n] = 1.0;
    Ok((sys, objective))
}

/// The initial master LP: `Z(N)` with utility bounds, plus `w` for maximin.
pub fn master_program(game: &Game, config: &RunConfig) -> Result<LinearProgram> {
    let (j, n) = (game.num_goods(), game.num_players());
    let ranges = game.utility_range(&game.pooled_endowment_f64(&game.grand())?)?;
    let lower: Vec<f64> = if config.individual_rationality {
        membership::singleton_lower_bounds(game)?
    } else {
        ranges.iter().map(|r| r.0).collect()
    };
    let (sys, objective) = match &config.objective {
        Objective::Maximin { secondary_weight } => maximin_extension(game, *secondary_weight)?,
        Objective::Utilitarian => {
            let mut o = vec![0.0; j + n];
            o[j..].iter_mut().for_each(|c| *c = 1.0);
            (game.design_utility_space(&game.grand())?, o)
        }
        Objective::CustomLinear(c) => {
            if c.len() != j + n {
                return Err(Error::DimensionMismatch { what: "objective", expected: j + n, found: c.len() });
            }
            (game.design_utility_space(&game.grand())?, c.clone())
        }
    };
    let mut program = sys.to_program(Direction::Maximize, objective);
    for i in 0..n {
        let hi = ranges[i].1.max(lower[i]);
        program.bounds[j + i] = Bounds::new(lower[i], hi);
    }
    if let Objective::Maximin { .. } = config.objective {
        let lo = lower.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = program.bounds[j + n].upper.max(lo);
        program.bounds[j + n] = Bounds::new(lo, hi);
    }
    Ok(program)
}

/// Optimizes `config.objective` over the core of `game`.
pub fn solve_over_core(game: &Game, config: &RunConfig) -> Result<SolveOutcome> {
    if config.delta < 0.0 {
        return Err(Error::BadInstance(format!("objection tolerance {} is negative", config.delta)));
    }
    let (j, n) = (game.num_goods(), game.num_players());
    let member = Membership::new(game)?;
    let mut program = master_program(game, config)?;
    let mut trajectory = Trajectory::default();
    let mut cut_log = Vec::new();
    let mut accepted_cuts = Vec::new();
    let mut pool = CoalitionPool::new();

    let mut solution = match lp::solve(&program) {
        Ok(s) => s,
        Err(LpError::NumericalBreakdown { .. }) => {
            return Ok(breakdown(game, trajectory, cut_log, accepted_cuts));
        }
        Err(e) => return Err(e.into()),
    };
    let mut last = (vec![0.0; j], vec![0.0; n], f64::NAN);
    for iteration in 0.. {
        let started = Instant::now();
        if solution.status != Status::Optimal {
            let status = match solution.status {
                Status::Infeasible => RunStatus::RelaxationInfeasible,
                _ => return Err(Error::BadInstance("master relaxation is unbounded".into())),
            };
            return Ok(finish(status, last, trajectory, cut_log, accepted_cuts));
        }
        let plan = solution.x[..j].to_vec();
        let utilities = solution.x[j..j + n].to_vec();
        let result = member.least_objection(&utilities, config.mode, &pool, config.membership_budget)?;
        let epsilon = result.epsilon();
        let mut record = IterationRecord {
            iteration,
            objective: solution.objective_value,
            utilitarian: welfare(&utilities, WelfareKind::Utilitarian),
            maximin: welfare(&utilities, WelfareKind::Maximin),
            epsilon,
            coalition_size: result.objection.coalition.len(),
            cuts_added: 0,
            condition: solution.condition_estimate,
            nodes: result.nodes,
            timed_out: result.timed_out,
        };
        last = (plan, utilities.clone(), epsilon);

        let converged = config.mode.within(epsilon, config.delta);
        if converged || iteration >= config.max_iterations.saturating_sub(1) {
            record.coalition_size = if converged { 0 } else { record.coalition_size };
            trajectory.records.push(record);
            trajectory.wall_times.push(started.elapsed().as_secs_f64());
            let status = match (converged, result.timed_out) {
                (true, false) => RunStatus::Converged,
                (true, true) => RunStatus::Unverified,
                _ => RunStatus::IterationCap,
            };
            return Ok(finish(status, last, trajectory, cut_log, accepted_cuts));
        }

        let incumbent = result.objection.coalition.clone();
        let mut round: Vec<CutRecord> = Vec::new();
        match cuts::intersection_cut(game, &program, &solution, &incumbent) {
            Ok((cut, _)) => {
                let decision = cuts::filter_cut(&cut, &incumbent, CutOrigin::Incumbent);
                cut_log.push(CutLogRecord::new(iteration, &cut, decision));
                if decision == FilterDecision::Accept {
                    round.push(cut);
                }
            }
            Err(Error::PointNotInterior { .. } | Error::AllRaysInterior) => {}
            Err(Error::Lp(LpError::NumericalBreakdown { .. })) => {
                trajectory.records.push(record);
                trajectory.wall_times.push(started.elapsed().as_secs_f64());
                return Ok(finish(RunStatus::NumericalBreakdown, last, trajectory, cut_log, accepted_cuts));
            }
            Err(e) => return Err(e),
        }
        for s in pool.coalitions() {
            if *s == incumbent || s.intersects(&incumbent) {
                continue;
            }
            let still_blocks = member
                .evaluate_coalition(&utilities, config.mode, s)?
                .is_some_and(|o| o.epsilon > config.mode.baseline() + TIE_TOL);
            if !still_blocks {
                continue;
            }
            match cuts::intersection_cut(game, &program, &solution, s) {
                Ok((cut, _)) => {
                    let decision = cuts::filter_cut(&cut, &incumbent, CutOrigin::Replay);
                    cut_log.push(CutLogRecord::new(iteration, &cut, decision));
                    if decision == FilterDecision::Accept {
                        round.push(cut);
                    }
                }
                Err(Error::PointNotInterior { .. } | Error::AllRaysInterior) => {}
                Err(Error::Lp(LpError::NumericalBreakdown { .. })) => {}
                Err(e) => return Err(e),
            }
        }
        pool.insert(incumbent, epsilon);

        record.cuts_added = round.len();
        trajectory.records.push(record);
        trajectory.wall_times.push(started.elapsed().as_secs_f64());
        if round.is_empty() {
            return Ok(finish(RunStatus::Stalled, last, trajectory, cut_log, accepted_cuts));
        }
        for cut in round {
            let row = cut.row();
            accepted_cuts.push(cut);
            solution = match add_row(&solution, &mut program, row) {
                Ok(s) => s,
                Err(LpError::NumericalBreakdown { .. }) => {
                    return Ok(finish(RunStatus::NumericalBreakdown, last, trajectory, cut_log, accepted_cuts));
                }
                Err(e) => return Err(e.into()),
            };
            if solution.status == Status::Infeasible {
                break;
            }
        }
        if solution.status == Status::Infeasible {
            continue;
        }
    }
    unreachable!("the iteration loop only exits by returning")
}

/// Adds a cut and re-solves; warm when the previous solve was optimal.
fn add_row(previous: &BasicSolution, program: &mut LinearProgram, row: lp::Row) -> std::result::Result<BasicSolution, LpError> {
    if previous.is_optimal() {
        lp::resolve_with_row(previous, program, row)
    } else {
        program.rows.push(row);
        lp::solve(program)
    }
}

fn finish(
    status: RunStatus,
    last: (Vec<f64>, Vec<f64>, f64),
    trajectory: Trajectory,
    cut_log: Vec<CutLogRecord>,
    cuts: Vec<CutRecord>,
) -> SolveOutcome {
    let (plan, utilities, epsilon) = last;
    SolveOutcome { status, plan, utilities, epsilon, trajectory, cut_log, cuts }
}

fn breakdown(game: &Game, trajectory: Trajectory, cut_log: Vec<CutLogRecord>, cuts: Vec<CutRecord>) -> SolveOutcome {
    let last = (vec![0.0; game.num_goods()], vec![0.0; game.num_players()], f64::NAN);
    finish(RunStatus::NumericalBreakdown, last, trajectory, cut_log, cuts)
}

/// Unconstrained optimum of the objective over the grand coalition's
/// design-utility space, ignoring the core (with the same utility bounds).
pub fn unconstrained_optimum(game: &Game, config: &RunConfig) -> Result<(DesignPlan, UtilityVector, f64)> {
    let program = master_program(game, config)?;
    let sol = lp::solve(&program)?;
    if !sol.is_optimal() {
        return Err(Error::BadInstance(format!("unconstrained master is {:?}", sol.status)));
    }
    let (j, n) = (game.num_goods(), game.num_players());
    Ok((sol.x[..j].to_vec(), sol.x[j..j + n].to_vec(), sol.objective_value))
}

/// Coalitions whose cuts were accepted, in the order added.
pub fn cut_sources(outcome: &SolveOutcome) -> Vec<Coalition> {
    outcome.cuts.iter().map(|c| c.source.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{int, ratio};
    use crate::membership::least_objection;

    fn empty_core() -> Game {
        Game::new(
            vec![vec![int(1), int(1)]],
            vec![vec![int(1)]; 3],
            vec![vec![ratio(2, 3), ratio(1, 3)], vec![ratio(2, 3), ratio(1, 3)], vec![ratio(-2, 3), ratio(1, 3)]],
        )
        .unwrap()
    }

    fn motivating() -> Game {
        // Line A (10 km) serves everyone, line B (2 km) riders 2 and 3.
        Game::new(
            vec![vec![int(10), int(2)]],
            vec![vec![int(1)]; 3],
            vec![vec![int(1), int(0)], vec![int(1), int(1)], vec![int(1), int(1)]],
        )
        .unwrap()
    }

    #[test]
    fn welfare_kinds() {
        assert_eq!(welfare(&[1.0, 2.0, 3.0], WelfareKind::Utilitarian), 6.0);
        assert_eq!(welfare(&[1.0, 2.0, 3.0], WelfareKind::Maximin), 1.0);
    }

    #[test]
    fn one_player_converges_immediately() {
        let g = Game::new(vec![vec![int(1), int(2)]], vec![vec![int(2)]], vec![vec![int(1), int(1)]]).unwrap();
        let out = solve_over_core(&g, &RunConfig::default()).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        assert_eq!(out.trajectory.len(), 1);
        assert!((out.utilities[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn empty_core_never_converges() {
        let g = empty_core();
        for objective in [Objective::Utilitarian, Objective::maximin()] {
            let config = RunConfig { objective, max_iterations: 60, individual_rationality: false, ..RunConfig::default() };
            let out = solve_over_core(&g, &config).unwrap();
            assert_ne!(out.status, RunStatus::Converged, "{:?}", out.trajectory.epsilons());
        }
    }

    #[test]
    fn motivating_scenario_maximin() {
        let g = motivating();
        let config = RunConfig { objective: Objective::maximin(), ..RunConfig::default() };
        let out = solve_over_core(&g, &config).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        // {2,3} alone fund line B: 2 / 2 km = 1 each.
        assert!(out.utilities[1] >= 1.0 - config.delta && out.utilities[2] >= 1.0 - config.delta, "{:?}", out.utilities);
        assert!((out.utilities[0] - 0.125).abs() < 1e-3, "{:?}", out.utilities);
        // Safety: a fresh search agrees.
        let check = least_objection(&g, &out.utilities, config.mode, &CoalitionPool::new(), Budget::default()).unwrap();
        assert!(config.mode.within(check.epsilon(), config.delta));
    }

    #[test]
    fn objective_is_monotone() {
        let g = motivating();
        let config = RunConfig { objective: Objective::maximin(), ..RunConfig::default() };
        let out = solve_over_core(&g, &config).unwrap();
        for pair in out.trajectory.records.windows(2) {
            assert!(pair[1].objective <= pair[0].objective + 1e-9);
        }
    }

    #[test]
    fn maximin_extension_symmetric_players() {
        let g = Game::new(vec![vec![int(1)]], vec![vec![int(1)]; 2], vec![vec![int(1)]; 2]).unwrap();
        let (sys, objective) = maximin_extension(&g, DEFAULT_SECONDARY_WEIGHT).unwrap();
        let sol = lp::solve(&sys.to_program(Direction::Maximize, objective)).unwrap();
        assert!((sol.x[3] - 2.0).abs() < 1e-9);
        assert!((sol.x[1] - 2.0).abs() < 1e-9 && (sol.x[2] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn maximin_extension_empty_core_grand_lp() {
        let g = empty_core();
        let (sys, objective) = maximin_extension(&g, 0.0).unwrap();
        let sol = lp::solve(&sys.to_program(Direction::Maximize, objective)).unwrap();
        // min(2/3 x1 + 1/3 x2, -2/3 x1 + 1/3 x2) over x1 + x2 <= 3 is 1 at x = (0, 3).
        assert!((sol.objective_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn multiplicative_mode_converges_on_motivating_scenario() {
        let g = motivating();
        let config = RunConfig { objective: Objective::maximin(), mode: ObjectionMode::multiplicative(), ..RunConfig::default() };
        let out = solve_over_core(&g, &config).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        let eps = out.trajectory.epsilons();
        assert!(eps.last().unwrap() <= eps.first().unwrap());
    }
}
