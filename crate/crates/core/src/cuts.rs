//! Intersection cuts against the utility sets of blocking coalitions.
//!
//! At an optimal vertex `f*` of the relaxation the simplex tableau gives a
//! translated cone `{f* + Σ μ_r r}` containing the relaxation. If `f*` lies
//! in the interior of a coalition's set `U'(S)`, every ray leaves that set
//! after a step `λ_r` (possibly never), and
//!
//! ```text
//! Σ_r f_r / λ_r >= 1
//! ```
//!
//! holds on every point of the relaxation outside `int U'(S)` while cutting
//! off `f*`. Here `f_r` is the distance of nonbasic variable `r` from its
//! bound, written back in the relaxation's own variables.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Coalition, ConstraintSystem, Game};
use crate::lp::{self, extract_rays, BasicSolution, Bounds, LinearProgram, RowSense, Status, TableauRays};

pub const INTERIOR_TOL: f64 = 1e-9;
pub const MIN_DEPTH: f64 = 1e-7;
pub const MAX_COEFFICIENT: f64 = 1e6;
pub const MIN_COEFFICIENT: f64 = 1e-6;
pub const MAX_RANGE: f64 = 1e6;
/// Coefficients below this magnitude are rounding noise and are dropped.
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientStats {
    pub min_abs: f64,
    pub max_abs: f64,
    pub range: f64,
}

impl CoefficientStats {
    pub fn of(coefficients: &[f64]) -> Self {
        let nonzero = coefficients.iter().map(|c| c.abs()).filter(|&c| c > 0.0);
        let (min_abs, max_abs) = nonzero.fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(c), hi.max(c)));
        if max_abs == 0.0 {
            return Self { min_abs: 0.0, max_abs: 0.0, range: 1.0 };
        }
        Self { min_abs, max_abs, range: max_abs / min_abs }
    }
}

/// `coefficients · z >= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutRecord {
    pub coefficients: Vec<f64>,
    pub rhs: f64,
    pub source: Coalition,
    /// Euclidean distance from the generating vertex to the cut hyperplane.
    pub depth: f64,
    pub stats: CoefficientStats,
    /// The relaxation vertex the cut separates.
    pub vertex: Vec<f64>,
}

impl CutRecord {
    pub fn violation(&self, z: &[f64]) -> f64 {
        self.rhs - lp::dot(&self.coefficients, z)
    }

    pub fn is_satisfied(&self, z: &[f64], tol: f64) -> bool {
        self.violation(z) <= tol
    }

    pub fn row(&self) -> lp::Row {
        lp::Row::new(self.coefficients.clone(), RowSense::Ge, self.rhs)
    }
}

/// Largest `λ >= 0` with `point + λ·ray` in the set, or `+∞`. The set may be
/// a projection; its auxiliary variables are optimized jointly with `λ`.
pub fn compute_lambda(point: &[f64], ray: &[f64], set: &ConstraintSystem) -> Result<f64> {
    let d = set.dim();
    if point.len() != d || ray.len() != d {
        return Err(Error::DimensionMismatch { what: "point or ray", expected: d, found: point.len().min(ray.len()) });
    }
    let margin = interior_margin(point, set)?;
    if margin <= INTERIOR_TOL {
        return Err(Error::PointNotInterior { violation: -margin });
    }
    step_length(point, ray, set)
}

/// [`compute_lambda`] for a point already known to be interior.
fn step_length(point: &[f64], ray: &[f64], set: &ConstraintSystem) -> Result<f64> {
    let d = set.dim();
    if ray.iter().all(|&r| r == 0.0) {
        return Ok(f64::INFINITY);
    }
    // Variables: (λ, aux).
    let mut objective = vec![0.0; 1 + set.aux];
    objective[0] = 1.0;
    let mut lp = LinearProgram::maximize(objective);
    lp.bounds[1..].copy_from_slice(&set.bounds[d..]);
    for row in &set.rows {
        let mut c = Vec::with_capacity(1 + set.aux);
        c.push(lp::dot(&row.coefficients[..d], ray));
        c.extend_from_slice(&row.coefficients[d..]);
        lp.add_row(c, row.sense, row.rhs - lp::dot(&row.coefficients[..d], point));
    }
    for (k, b) in set.bounds[..d].iter().enumerate() {
        if ray[k] == 0.0 {
            continue;
        }
        let mut c = vec![0.0; 1 + set.aux];
        c[0] = ray[k];
        if b.upper.is_finite() {
            lp.add_row(c.clone(), RowSense::Le, b.upper - point[k]);
        }
        if b.lower.is_finite() {
            lp.add_row(c, RowSense::Ge, b.lower - point[k]);
        }
    }
    let sol = lp::solve(&lp)?;
    match sol.status {
        Status::Unbounded => Ok(f64::INFINITY),
        Status::Optimal => Ok(sol.objective_value.max(0.0)),
        Status::Infeasible => Err(Error::PointNotInterior { violation: f64::INFINITY }),
    }
}

/// Largest uniform slack `s <= 1` with which `point` satisfies every row
/// that involves the set's own coordinates (rows over auxiliary variables
/// only are kept as they are). Positive exactly on the interior.
pub fn interior_margin(point: &[f64], set: &ConstraintSystem) -> Result<f64> {
    let d = set.dim();
    let mut objective = vec![0.0; set.aux + 1];
    objective[set.aux] = 1.0;
    let mut lp = LinearProgram::maximize(objective);
    lp.bounds[..set.aux].copy_from_slice(&set.bounds[d..]);
    lp.bounds[set.aux] = Bounds::new(f64::NEG_INFINITY, 1.0);
    for row in &set.rows {
        let visible = &row.coefficients[..d];
        let norm = visible.iter().map(|c| c * c).sum::<f64>().sqrt();
        let shift = lp::dot(visible, point);
        let mut c = row.coefficients[d..].to_vec();
        let slack = if norm > 0.0 { norm } else { 0.0 };
        match row.sense {
            RowSense::Le => {
                c.push(slack);
                lp.add_row(c, RowSense::Le, row.rhs - shift);
            }
            RowSense::Ge => {
                c.push(-slack);
                lp.add_row(c, RowSense::Ge, row.rhs - shift);
            }
            RowSense::Eq => {
                if norm > 0.0 {
                    // An equality on visible coordinates has empty interior.
                    return Ok(f64::NEG_INFINITY);
                }
                c.push(0.0);
                lp.add_row(c, RowSense::Eq, row.rhs - shift);
            }
        }
    }
    let mut margin = f64::INFINITY;
    for (k, b) in set.bounds[..d].iter().enumerate() {
        margin = margin.min(point[k] - b.lower).min(b.upper - point[k]);
    }
    let sol = lp::solve(&lp)?;
    let lp_margin = match sol.status {
        Status::Optimal => sol.objective_value,
        Status::Infeasible => f64::NEG_INFINITY,
        Status::Unbounded => 1.0,
    };
    Ok(margin.min(lp_margin))
}

/// Assembles `Σ f_r / λ_r >= 1` in the relaxation's variables.
pub fn build_intersection_cut(rays: &TableauRays, lambdas: &[f64], source: Coalition) -> Result<CutRecord> {
    assert_eq!(rays.rays.len(), lambdas.len(), "one step length per ray");
    let n = rays.dim();
    let mut coefficients = vec![0.0; n];
    let mut constant = 0.0;
    let mut finite = false;
    for (ray, &lambda) in rays.rays.iter().zip(lambdas) {
        if !lambda.is_finite() {
            continue;
        }
        finite = true;
        let w = 1.0 / lambda;
        for (c, a) in coefficients.iter_mut().zip(&ray.nonbasic.coefficients) {
            *c += w * a;
        }
        constant += w * ray.nonbasic.constant;
    }
    if !finite {
        return Err(Error::AllRaysInterior);
    }
    for c in &mut coefficients {
        if c.abs() < ZERO_TOL {
            *c = 0.0;
        }
    }
    let rhs = 1.0 - constant;
    let norm = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
    let violation = rhs - lp::dot(&coefficients, &rays.apex);
    let depth = if norm > 0.0 { violation / norm } else { 0.0 };
    let stats = CoefficientStats::of(&coefficients);
    Ok(CutRecord { coefficients, rhs, source, depth, stats, vertex: rays.apex.clone() })
}

/// Cut against `U'(source)` at the optimal vertex `solution` of `lp`,
/// whose first `game.dim()` variables are `(x, u)`.
pub fn intersection_cut(
    game: &Game,
    program: &LinearProgram,
    solution: &BasicSolution,
    source: &Coalition,
) -> Result<(CutRecord, TableauRays)> {
    let rays = extract_rays(solution, program)?;
    let set = game.utility_set(source, program.num_vars())?;
    let margin = interior_margin(&rays.apex, &set)?;
    if margin <= INTERIOR_TOL {
        return Err(Error::PointNotInterior { violation: -margin });
    }
    let lambdas: Vec<f64> = rays
        .rays
        .par_iter()
        .map(|r| step_length(&rays.apex, &r.direction, &set))
        .collect::<Result<_>>()?;
    let cut = build_intersection_cut(&rays, &lambdas, source.clone())?;
    Ok((cut, rays))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutOrigin {
    /// The cut of the coalition just found by the membership search.
    Incumbent,
    /// A cut replayed from a pooled coalition that still blocks.
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    Shallow,
    LargeCoefficient,
    SmallCoefficient,
    WideRange,
    Overlap,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::Shallow => "shallow",
            RejectReason::LargeCoefficient => "large_coefficient",
            RejectReason::SmallCoefficient => "small_coefficient",
            RejectReason::WideRange => "wide_range",
            RejectReason::Overlap => "overlap",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Accept,
    Reject(RejectReason),
}

/// Every cut must separate by at least [`MIN_DEPTH`]. Replayed cuts are
/// further dropped when their coefficients are badly scaled or their
/// coalition overlaps the incumbent blocking coalition.
pub fn filter_cut(cut: &CutRecord, incumbent: &Coalition, origin: CutOrigin) -> FilterDecision {
    if !(cut.depth >= MIN_DEPTH) {
        return FilterDecision::Reject(RejectReason::Shallow);
    }
    if origin == CutOrigin::Incumbent {
        return FilterDecision::Accept;
    }
    match numeric_filter(&cut.stats) {
        Some(reason) => FilterDecision::Reject(reason),
        None if cut.source.intersects(incumbent) => FilterDecision::Reject(RejectReason::Overlap),
        None => FilterDecision::Accept,
    }
}

/// Coefficient hygiene checks on their own.
pub fn numeric_filter(stats: &CoefficientStats) -> Option<RejectReason> {
    if stats.max_abs > MAX_COEFFICIENT {
        Some(RejectReason::LargeCoefficient)
    } else if stats.max_abs > 0.0 && stats.min_abs < MIN_COEFFICIENT {
        Some(RejectReason::SmallCoefficient)
    } else if stats.range > MAX_RANGE {
        Some(RejectReason::WideRange)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutLogRecord {
    pub iteration: usize,
    pub coalition_size: usize,
    pub depth: f64,
    pub min_abs: f64,
    pub max_abs: f64,
    pub range: f64,
    pub accepted: bool,
    pub reason: String,
}

impl CutLogRecord {
    pub fn new(iteration: usize, cut: &CutRecord, decision: FilterDecision) -> Self {
        Self {
            iteration,
            coalition_size: cut.source.len(),
            depth: cut.depth,
            min_abs: cut.stats.min_abs,
            max_abs: cut.stats.max_abs,
            range: cut.stats.range,
            accepted: decision == FilterDecision::Accept,
            reason: match decision {
                FilterDecision::Accept => String::new(),
                FilterDecision::Reject(r) => r.to_string(),
            },
        }
    }
}

pub fn write_cut_log(path: &Path, records: &[CutLogRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
