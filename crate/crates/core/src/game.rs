//! NTU LP games: data model and coalition geometry.
//!
//! A game is given by a production matrix `A` (resources × goods), one
//! endowment vector `b^i` and one valuation vector `v^i` per player. A
//! coalition `S` can build any plan in `X(S) = {x >= 0 : A x <= b(S)}`, and
//! player `i` values plan `x` at `v^i · x`.
//!
//! Data is held as exact rationals with cached `f64` copies for the LP code.
//! Design-utility points are laid out as `(x_0..x_{J-1}, u_0..u_{N-1})`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, Bounds, Direction, LinearProgram, Row, RowSense, Status};

pub type Rational = BigRational;
pub type DesignPlan = Vec<f64>;
pub type UtilityVector = Vec<f64>;

/// Largest player count accepted by exhaustive coalition scans.
pub const DUAL_CONE_ALL_MAX_PLAYERS: usize = 20;

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"-0.25"`.
pub fn parse_rational(text: &str) -> std::result::Result<Rational, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty rational".into());
    }
    if s.contains('/') {
        return Rational::from_str(s).map_err(|e| format!("invalid rational {s:?}: {e}"));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
            return Err(format!("invalid decimal {s:?}"));
        }
        let mut numer = BigInt::from_str(&digits).map_err(|e| format!("invalid decimal {s:?}: {e}"))?;
        if negative {
            numer = -numer;
        }
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Rational::new(numer, denom));
    }
    BigInt::from_str(s)
        .map(Rational::from_integer)
        .map_err(|e| format!("invalid integer {s:?}: {e}"))
}

/// Canonical `p/q` (or `p` for integers) text.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A nonempty set of players, stored sorted. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coalition {
    members: Vec<usize>,
}

impl Coalition {
    pub fn new(members: impl IntoIterator<Item = usize>, players: usize) -> Result<Self> {
        let set: BTreeSet<usize> = members.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptyCoalition);
        }
        if let Some(&player) = set.iter().next_back().filter(|&&p| p >= players) {
            return Err(Error::PlayerOutOfRange { player, players });
        }
        Ok(Self { members: set.into_iter().collect() })
    }

    pub fn singleton(player: usize) -> Self {
        Self { members: vec![player] }
    }

    pub fn grand(players: usize) -> Self {
        Self { members: (0..players).collect() }
    }

    /// Coalition of the set bits of `mask`; `None` for the empty mask.
    pub fn from_mask(mask: u64) -> Option<Self> {
        let members: Vec<usize> = (0..64).filter(|i| mask >> i & 1 == 1).collect();
        (!members.is_empty()).then_some(Self { members })
    }

    pub fn mask(&self) -> u64 {
        self.members.iter().fold(0, |m, &i| m | 1 << i)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, player: usize) -> bool {
        self.members.binary_search(&player).is_ok()
    }

    pub fn intersects(&self, other: &Coalition) -> bool {
        self.members.iter().any(|&i| other.contains(i))
    }

    /// Members numbered from one, space separated.
    pub fn label(&self) -> String {
        self.members.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// A polyhedron given by rows and variable bounds. When `aux > 0` the last
/// `aux` variables are auxiliary and the set is the projection onto the
/// leading `num_vars - aux` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub rows: Vec<Row>,
    pub bounds: Vec<Bounds>,
    pub aux: usize,
}

impl ConstraintSystem {
    pub fn new(bounds: Vec<Bounds>) -> Self {
        Self { rows: Vec::new(), bounds, aux: 0 }
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    /// Dimension of the space the set lives in.
    pub fn dim(&self) -> usize {
        self.bounds.len() - self.aux
    }

    pub fn add_row(&mut self, coefficients: Vec<f64>, sense: RowSense, rhs: f64) {
        debug_assert_eq!(coefficients.len(), self.num_vars());
        self.rows.push(Row::new(coefficients, sense, rhs));
    }

    pub fn to_program(&self, direction: Direction, objective: Vec<f64>) -> LinearProgram {
        let mut lp = LinearProgram::new(direction, objective);
        lp.rows = self.rows.clone();
        lp.bounds = self.bounds.clone();
        lp
    }

    /// Largest violation of `point` over the full variable vector.
    pub fn max_violation(&self, point: &[f64]) -> f64 {
        self.to_program(Direction::Maximize, vec![0.0; self.num_vars()]).max_violation(point)
    }

    /// Membership of a point of dimension `dim()`. Projected systems are
    /// checked with a feasibility LP over the auxiliary variables.
    pub fn contains(&self, point: &[f64], tol: f64) -> Result<bool> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch { what: "point", expected: self.dim(), found: point.len() });
        }
        let d = self.dim();
        let in_bounds = self.bounds[..d].iter().zip(point).all(|(b, &v)| b.contains(v, tol));
        if !in_bounds {
            return Ok(false);
        }
        if self.aux == 0 {
            return Ok(self.max_violation(point) <= tol);
        }
        let mut lp = LinearProgram::maximize(vec![0.0; self.aux]);
        lp.bounds = self.bounds[d..].to_vec();
        for row in &self.rows {
            let fixed = lp::dot(&row.coefficients[..d], point);
            lp.add_row(row.coefficients[d..].to_vec(), row.sense, row.rhs - fixed);
        }
        // Relax every row by the tolerance so boundary points are accepted.
        for row in &mut lp.rows {
            match row.sense {
                RowSense::Le => row.rhs += tol,
                RowSense::Ge => row.rhs -= tol,
                RowSense::Eq => {}
            }
        }
        Ok(lp::solve(&lp)?.status == Status::Optimal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BalanceCheck {
    /// Every valuation is elementwise nonnegative.
    Nonneg,
    /// Every valuation lies in the dual cone of the grand design space.
    DualConeGrand,
    /// Every valuation lies in the dual cone of every coalition's space.
    DualConeAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BalanceStatus {
    GuaranteedNonEmpty,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceWitness {
    pub player: usize,
    pub coalition: Coalition,
    /// A plan the player values negatively (or a negative valuation entry
    /// as a unit vector).
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancednessVerdict {
    pub status: BalanceStatus,
    pub witness: Vec<BalanceWitness>,
    pub note: Option<String>,
}

impl BalancednessVerdict {
    pub fn is_guaranteed(&self) -> bool {
        self.status == BalanceStatus::GuaranteedNonEmpty
    }
}

#[derive(Debug, Clone)]
pub struct Game {
    production: Vec<Vec<Rational>>,
    endowments: Vec<Vec<Rational>>,
    valuations: Vec<Vec<Rational>>,
    labels: Option<Vec<String>>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl PartialEq for Game {
    fn eq(&self, other: &Self) -> bool {
        self.production == other.production
            && self.endowments == other.endowments
            && self.valuations == other.valuations
            && self.labels == other.labels
    }
}

fn matrix_f64(m: &[Vec<Rational>]) -> Vec<Vec<f64>> {
    m.iter().map(|row| row.iter().map(to_f64).collect()).collect()
}

impl Game {
    /// Builds and validates a game. `production` is `K × J`; every player's
    /// design space must be nonempty and bounded.
    pub fn new(
        production: Vec<Vec<Rational>>,
        endowments: Vec<Vec<Rational>>,
        valuations: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let k = production.len();
        let j = production.first().map_or(0, Vec::len);
        if k == 0 || j == 0 {
            return Err(Error::BadInstance("production matrix must have at least one row and column".into()));
        }
        if let Some(row) = production.iter().find(|r| r.len() != j) {
            return Err(Error::DimensionMismatch { what: "production row", expected: j, found: row.len() });
        }
        if endowments.is_empty() {
            return Err(Error::BadInstance("game has no players".into()));
        }
        if endowments.len() != valuations.len() {
            return Err(Error::DimensionMismatch {
                what: "valuation count",
                expected: endowments.len(),
                found: valuations.len(),
            });
        }
        if let Some(b) = endowments.iter().find(|b| b.len() != k) {
            return Err(Error::DimensionMismatch { what: "endowment", expected: k, found: b.len() });
        }
        if let Some(v) = valuations.iter().find(|v| v.len() != j) {
            return Err(Error::DimensionMismatch { what: "valuation", expected: j, found: v.len() });
        }
        let game = Self {
            a: matrix_f64(&production),
            b: matrix_f64(&endowments),
            v: matrix_f64(&valuations),
            production,
            endowments,
            valuations,
            labels: None,
        };
        game.validate_design_spaces()?;
        Ok(game)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.num_players() {
            return Err(Error::DimensionMismatch { what: "labels", expected: self.num_players(), found: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    fn validate_design_spaces(&self) -> Result<()> {
        let (k, j) = (self.num_resources(), self.num_goods());
        // X({i}) is bounded iff the recession cone {x >= 0 : A x <= 0} is {0}.
        let mut cone = LinearProgram::maximize(vec![1.0; j]);
        for row in &self.a {
            cone.add_row(row.clone(), RowSense::Le, 0.0);
        }
        cone.add_row(vec![1.0; j], RowSense::Le, 1.0);
        let sol = lp::solve(&cone)?;
        if sol.is_optimal() && sol.objective_value > lp::FEASIBILITY_TOL {
            return Err(Error::UnboundedDesignSpace(sol.x));
        }
        for i in 0..self.num_players() {
            let mut feas = LinearProgram::maximize(vec![0.0; j]);
            for r in 0..k {
                feas.add_row(self.a[r].clone(), RowSense::Le, self.b[i][r]);
            }
            if lp::solve(&feas)?.status == Status::Infeasible {
                return Err(Error::EmptyDesignSpace(i));
            }
        }
        Ok(())
    }

    pub fn num_players(&self) -> usize {
        self.endowments.len()
    }

    pub fn num_resources(&self) -> usize {
        self.production.len()
    }

    pub fn num_goods(&self) -> usize {
        self.production[0].len()
    }

    /// Dimension of the design-utility space `(x, u)`.
    pub fn dim(&self) -> usize {
        self.num_goods() + self.num_players()
    }

    pub fn production(&self) -> &[Vec<Rational>] {
        &self.production
    }

    pub fn endowment(&self, i: usize) -> &[Rational] {
        &self.endowments[i]
    }

    pub fn valuation(&self, i: usize) -> &[Rational] {
        &self.valuations[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn a_f64(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b_f64(&self, i: usize) -> &[f64] {
        &self.b[i]
    }

    pub fn v_f64(&self, i: usize) -> &[f64] {
        &self.v[i]
    }

    pub fn grand(&self) -> Coalition {
        Coalition::grand(self.num_players())
    }

    fn check_coalition(&self, s: &Coalition) -> Result<()> {
        if s.is_empty() {
            return Err(Error::EmptyCoalition);
        }
        let n = self.num_players();
        match s.members().iter().find(|&&i| i >= n) {
            Some(&player) => Err(Error::PlayerOutOfRange { player, players: n }),
            None => Ok(()),
        }
    }

    /// `b(S) = Σ_{i ∈ S} b^i`, exactly.
    pub fn pooled_endowment(&self, s: &Coalition) -> Result<Vec<Rational>> {
        self.check_coalition(s)?;
        let mut total = vec![Rational::zero(); self.num_resources()];
        for &i in s.members() {
            for (t, b) in total.iter_mut().zip(&self.endowments[i]) {
                *t += b;
            }
        }
        Ok(total)
    }

    pub fn pooled_endowment_f64(&self, s: &Coalition) -> Result<Vec<f64>> {
        Ok(self.pooled_endowment(s)?.iter().map(to_f64).collect())
    }

    /// `Σ_i max(b^i, 0)` per resource: a budget whose design space contains
    /// every coalition's.
    pub fn positive_budget(&self) -> Vec<f64> {
        let mut total = vec![Rational::zero(); self.num_resources()];
        for b in &self.endowments {
            for (t, x) in total.iter_mut().zip(b) {
                if x.is_positive() {
                    *t += x;
                }
            }
        }
        total.iter().map(to_f64).collect()
    }

    pub fn has_nonnegative_endowments(&self) -> bool {
        self.endowments.iter().flatten().all(|b| !b.is_negative())
    }

    pub fn has_nonnegative_valuations(&self) -> bool {
        self.valuations.iter().flatten().all(|v| !v.is_negative())
    }

    /// `u_i(x) = v^i · x`.
    pub fn evaluate_utility(&self, i: usize, x: &[f64]) -> Result<f64> {
        if i >= self.num_players() {
            return Err(Error::PlayerOutOfRange { player: i, players: self.num_players() });
        }
        if x.len() != self.num_goods() {
            return Err(Error::DimensionMismatch { what: "design plan", expected: self.num_goods(), found: x.len() });
        }
        Ok(lp::dot(&self.v[i], x))
    }

    /// Exact utility of a rational plan.
    pub fn evaluate_utility_exact(&self, i: usize, x: &[Rational]) -> Rational {
        self.valuations[i].iter().zip(x).map(|(v, x)| v * x).sum()
    }

    /// Utilities of every player under plan `x`.
    pub fn utilities(&self, x: &[f64]) -> UtilityVector {
        self.v.iter().map(|v| lp::dot(v, x)).collect()
    }

    /// Whether `x` lies in `{x >= 0 : A x <= budget}` within `tol`.
    pub fn plan_fits(&self, x: &[f64], budget: &[f64], tol: f64) -> bool {
        x.iter().all(|&xj| xj >= -tol) && self.a.iter().zip(budget).all(|(row, &b)| lp::dot(row, x) <= b + tol)
    }

    fn budget_system(&self, budget: &[f64], offset: usize, total: usize) -> ConstraintSystem {
        let mut bounds = vec![Bounds::FREE; total];
        for bd in &mut bounds[offset..offset + self.num_goods()] {
            *bd = Bounds::NONNEGATIVE;
        }
        let mut sys = ConstraintSystem::new(bounds);
        for (row, &b) in self.a.iter().zip(budget) {
            let mut coefficients = vec![0.0; total];
            coefficients[offset..offset + row.len()].copy_from_slice(row);
            sys.add_row(coefficients, RowSense::Le, b);
        }
        sys
    }

    /// `X(S)` over the goods.
    pub fn design_space(&self, s: &Coalition) -> Result<ConstraintSystem> {
        let budget = self.pooled_endowment_f64(s)?;
        Ok(self.budget_system(&budget, 0, self.num_goods()))
    }

    /// `Z(S)` over `(x, u)`: `X(S)` plus `u_i <= v^i · x` for members. The
    /// coordinates of non-members are free.
    pub fn design_utility_space(&self, s: &Coalition) -> Result<ConstraintSystem> {
        let budget = self.pooled_endowment_f64(s)?;
        let j = self.num_goods();
        let mut sys = self.budget_system(&budget, 0, self.dim());
        for &i in s.members() {
            let mut coefficients = vec![0.0; self.dim()];
            for (c, v) in coefficients.iter_mut().zip(&self.v[i]) {
                *c = -v;
            }
            coefficients[j + i] = 1.0;
            sys.add_row(coefficients, RowSense::Le, 0.0);
        }
        Ok(sys)
    }

    /// `U'(S) = {(x, u) : u ∈ U(S)}` embedded in a space of dimension
    /// `dim >= J + N` whose first `J + N` coordinates are `(x, u)`. The set
    /// is free in `x`, in non-member utilities and in the trailing
    /// coordinates; a private copy of the plan is appended as auxiliary
    /// variables.
    pub fn utility_set(&self, s: &Coalition, dim: usize) -> Result<ConstraintSystem> {
        assert!(dim >= self.dim(), "utility set dimension smaller than (x, u)");
        let budget = self.pooled_endowment_f64(s)?;
        let j = self.num_goods();
        let total = dim + j;
        let mut sys = self.budget_system(&budget, dim, total);
        sys.aux = j;
        for &i in s.members() {
            let mut coefficients = vec![0.0; total];
            coefficients[j + i] = 1.0;
            for (c, v) in coefficients[dim..].iter_mut().zip(&self.v[i]) {
                *c = -v;
            }
            sys.add_row(coefficients, RowSense::Le, 0.0);
        }
        Ok(sys)
    }

    /// Minimum and maximum of `v^i · x` over `{x >= 0 : A x <= budget}`.
    pub fn utility_range(&self, budget: &[f64]) -> Result<Vec<(f64, f64)>> {
        let sys = self.budget_system(budget, 0, self.num_goods());
        let mut out = Vec::with_capacity(self.num_players());
        for v in &self.v {
            let lo = lp::solve(&sys.to_program(Direction::Minimize, v.clone()))?;
            let hi = lp::solve(&sys.to_program(Direction::Maximize, v.clone()))?;
            if !lo.is_optimal() || !hi.is_optimal() {
                return Err(Error::BadInstance("utility range LP is not optimal".into()));
            }
            out.push((lo.objective_value, hi.objective_value));
        }
        Ok(out)
    }

    /// Best plan for player `i` over `X(S)` and its value.
    pub fn best_plan(&self, i: usize, s: &Coalition) -> Result<(DesignPlan, f64)> {
        let sys = self.design_space(s)?;
        let sol = lp::solve(&sys.to_program(Direction::Maximize, self.v[i].clone()))?;
        if !sol.is_optimal() {
            return Err(Error::BadInstance(format!("best plan LP for player {i} is {:?}", sol.status)));
        }
        Ok((sol.x, sol.objective_value))
    }

    /// Sufficient conditions for a nonempty core.
    pub fn check_balanced_sufficient(&self, mode: BalanceCheck) -> Result<BalancednessVerdict> {
        let n = self.num_players();
        match mode {
            BalanceCheck::Nonneg => {
                let mut witness = Vec::new();
                for (i, v) in self.valuations.iter().enumerate() {
                    if let Some(jneg) = v.iter().position(|x| x.is_negative()) {
                        let mut direction = vec![0.0; self.num_goods()];
                        direction[jneg] = 1.0;
                        witness.push(BalanceWitness { player: i, coalition: Coalition::singleton(i), direction });
                    }
                }
                Ok(verdict(witness, None))
            }
            BalanceCheck::DualConeGrand => {
                let witness = self.dual_cone_witnesses(&self.grand())?;
                let note = (!self.has_nonnegative_endowments())
                    .then(|| "negative endowments: the grand dual cone does not cover every coalition".to_string());
                if note.is_some() {
                    return Ok(BalancednessVerdict { status: BalanceStatus::Inconclusive, witness, note });
                }
                Ok(verdict(witness, None))
            }
            BalanceCheck::DualConeAll => {
                if n > DUAL_CONE_ALL_MAX_PLAYERS {
                    return Err(Error::TooManyPlayers { found: n, limit: DUAL_CONE_ALL_MAX_PLAYERS });
                }
                let mut witness = Vec::new();
                for mask in 1..(1u64 << n) {
                    let s = Coalition::from_mask(mask).expect("nonzero mask");
                    witness.extend(self.dual_cone_witnesses(&s)?);
                }
                Ok(verdict(witness, None))
            }
        }
    }

    /// Players whose valuation is negative somewhere on `X(S)`.
    fn dual_cone_witnesses(&self, s: &Coalition) -> Result<Vec<BalanceWitness>> {
        let sys = self.design_space(s)?;
        let mut out = Vec::new();
        for i in 0..self.num_players() {
            let sol = lp::solve(&sys.to_program(Direction::Minimize, self.v[i].clone()))?;
            if sol.is_optimal() && sol.objective_value < -lp::FEASIBILITY_TOL {
                out.push(BalanceWitness { player: i, coalition: s.clone(), direction: sol.x });
            }
        }
        Ok(out)
    }

    pub fn to_json_value(&self) -> GameJson {
        let fmt = |m: &[Vec<Rational>]| -> Vec<Vec<String>> {
            m.iter().map(|r| r.iter().map(format_rational).collect()).collect()
        };
        GameJson {
            players: self.num_players(),
            resources: self.num_resources(),
            goods: self.num_goods(),
            a: fmt(&self.production),
            b: fmt(&self.endowments),
            v: fmt(&self.valuations),
            labels: self.labels.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("game serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawGame = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        raw.into_game()
    }
}

fn verdict(witness: Vec<BalanceWitness>, note: Option<String>) -> BalancednessVerdict {
    let status = if witness.is_empty() { BalanceStatus::GuaranteedNonEmpty } else { BalanceStatus::Inconclusive };
    BalancednessVerdict { status, witness, note }
}

/// On-disk game layout. Rationals are `"p/q"` strings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameJson {
    pub players: usize,
    pub resources: usize,
    pub goods: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<String>>,
    pub b: Vec<Vec<String>>,
    pub v: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    players: usize,
    resources: usize,
    goods: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<serde_json::Value>>,
    b: Vec<Vec<serde_json::Value>>,
    v: Vec<Vec<serde_json::Value>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

fn parse_matrix(name: &str, m: &[Vec<serde_json::Value>], rows: usize, cols: usize) -> Result<Vec<Vec<Rational>>> {
    if m.len() != rows {
        return Err(Error::parse(name, format!("expected {rows} rows, found {}", m.len())));
    }
    m.iter()
        .enumerate()
        .map(|(r, row)| {
            if row.len() != cols {
                return Err(Error::parse(format!("{name}[{r}]"), format!("expected {cols} entries, found {}", row.len())));
            }
            row.iter()
                .enumerate()
                .map(|(c, value)| {
                    let field = format!("{name}[{r}][{c}]");
                    match value {
                        serde_json::Value::String(s) => parse_rational(s).map_err(|m| Error::parse(field, m)),
                        serde_json::Value::Number(x) => parse_rational(&x.to_string()).map_err(|m| Error::parse(field, m)),
                        other => Err(Error::parse(field, format!("expected a rational string, found {other}"))),
                    }
                })
                .collect()
        })
        .collect()
}

impl RawGame {
    fn into_game(self) -> Result<Game> {
        let a = parse_matrix("A", &self.a, self.resources, self.goods)?;
        let b = parse_matrix("b", &self.b, self.players, self.resources)?;
        let v = parse_matrix("v", &self.v, self.players, self.goods)?;
        let game = Game::new(a, b, v)?;
        match self.labels {
            Some(labels) => game.with_labels(labels),
            None => Ok(game),
        }
    }
}
