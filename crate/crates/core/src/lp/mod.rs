//! Dense bounded-variable primal simplex with basis and tableau access.
//!
//! External LP solvers rarely expose the optimal basis in a form that is
//! convenient for cut generation, so the engine here keeps the basis inverse
//! explicit and hands it back through [`BasicSolution`] and [`extract_rays`].
//!
//! Rows are stored as `a·x (<=|>=|=) rhs`; internally every row `i` gets a
//! slack column `s_i` with `a·x + s_i = rhs`. Column indices in a
//! [`BasicSolution`] basis are `0..n` for structural variables and
//! `n..n+m` for the slack of row `j - n`.

mod rays;
mod simplex;

use std::fmt::Write as _;

pub use rays::{extract_rays, AffineExpr, Ray, TableauRays};
pub use simplex::{resolve_with_row, solve, SolveOptions};

/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Reduced-cost tolerance used for the optimality test.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Basis condition estimate above which a solve is abandoned.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LpError {
    #[error("row {row} has {found} coefficients, expected {expected}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },
    #[error("variable {var} has invalid bounds [{lower}, {upper}]")]
    InvalidBounds { var: usize, lower: f64, upper: f64 },
    #[error("non-finite data in {0}")]
    NonFinite(&'static str),
    #[error("numerical breakdown: basis condition estimate {condition:e} exceeds limit")]
    NumericalBreakdown { condition: f64 },
    #[error("basis matrix is singular")]
    SingularBasis,
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("operation requires an optimal basic solution")]
    NotOptimal,
    #[error("free variable {0} is nonbasic; the tableau cone is not pointed")]
    FreeNonbasic(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl RowSense {
    pub fn symbol(self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefficients: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coefficients: Vec<f64>, sense: RowSense, rhs: f64) -> Self {
        Self { coefficients, sense, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        dot(&self.coefficients, x)
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            RowSense::Le => (lhs - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - lhs).max(0.0),
            RowSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const NONNEGATIVE: Bounds = Bounds { lower: 0.0, upper: f64::INFINITY };
    pub const FREE: Bounds = Bounds { lower: f64::NEG_INFINITY, upper: f64::INFINITY };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn fixed(value: f64) -> Self {
        Self { lower: value, upper: value }
    }

    pub fn contains(&self, value: f64, tol: f64) -> bool {
        value >= self.lower - tol && value <= self.upper + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

/// A linear program over `n` bounded variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub bounds: Vec<Bounds>,
}

impl LinearProgram {
    /// New program with nonnegative variables and no rows.
    pub fn new(direction: Direction, objective: Vec<f64>) -> Self {
        let bounds = vec![Bounds::NONNEGATIVE; objective.len()];
        Self { direction, objective, rows: Vec::new(), bounds }
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Direction::Maximize, objective)
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Direction::Minimize, objective)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coefficients: Vec<f64>, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(Row::new(coefficients, sense, rhs));
        self.rows.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = Bounds::new(lower, upper);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::DimensionMismatch { row: usize::MAX, expected: n, found: self.bounds.len() });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        for (var, b) in self.bounds.iter().enumerate() {
            if b.lower.is_nan() || b.upper.is_nan() || b.lower > b.upper || b.lower == f64::INFINITY || b.upper == f64::NEG_INFINITY {
                return Err(LpError::InvalidBounds { var, lower: b.lower, upper: b.upper });
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coefficients.len() != n {
                return Err(LpError::DimensionMismatch { row: i, expected: n, found: row.coefficients.len() });
            }
            if !row.rhs.is_finite() || row.coefficients.iter().any(|c| !c.is_finite()) {
                return Err(LpError::NonFinite("constraint row"));
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(b, &v)| (b.lower - v).max(v - b.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Human-readable dump in the CPLEX LP style. Debugging aid only.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::new();
        let name = |j: usize| format!("x{j}");
        let _ = writeln!(
            out,
            "{}",
            match self.direction {
                Direction::Maximize => "Maximize",
                Direction::Minimize => "Minimize",
            }
        );
        let _ = writeln!(out, " obj: {}", linear_text(&self.objective, name));
        let _ = writeln!(out, "Subject To");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = writeln!(out, " c{i}: {} {} {}", linear_text(&row.coefficients, name), row.sense.symbol(), row.rhs);
        }
        let _ = writeln!(out, "Bounds");
        for (j, b) in self.bounds.iter().enumerate() {
            match (b.lower.is_finite(), b.upper.is_finite()) {
                (false, false) => {
                    let _ = writeln!(out, " {} free", name(j));
                }
                (true, false) => {
                    let _ = writeln!(out, " {} >= {}", name(j), b.lower);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {} <= {}", name(j), b.upper);
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {} <= {}", b.lower, name(j), b.upper);
                }
            }
        }
        let _ = writeln!(out, "End");
        out
    }
}

fn linear_text(coefficients: &[f64], name: impl Fn(usize) -> String) -> String {
    let terms: Vec<String> = coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, c)| format!("{} {} {}", if *c < 0.0 { "-" } else { "+" }, c.abs(), name(j)))
        .collect();
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a simplex solve. For `Optimal` results the basis is the final
/// one; for `Infeasible`/`Unbounded` only `status` is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Basic column per row position (structural `< n`, slack `n + row`).
    pub basis: Vec<usize>,
    /// For each of the `n + m` columns: nonbasic at its upper bound.
    pub at_upper: Vec<bool>,
    /// Row duals, signed for the program's own direction.
    pub duals: Vec<f64>,
    pub dual_objective: f64,
    pub condition_estimate: f64,
    pub iterations: usize,
}

impl BasicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub(crate) fn without_basis(status: Status, n: usize, iterations: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective_value: 0.0,
            basis: Vec::new(),
            at_upper: Vec::new(),
            duals: Vec::new(),
            dual_objective: 0.0,
            condition_estimate: 1.0,
            iterations,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests;
