use super::{BasicSolution, Direction, LinearProgram, LpError, Row, RowSense, Status, FEASIBILITY_TOL, MAX_CONDITION, OPTIMALITY_TOL};

/// Tuning knobs; the defaults are what [`solve`] uses.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Pivots between explicit refactorizations of the basis.
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before pricing falls back to Bland's rule.
    pub degenerate_switch: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iterations: 50_000, refactor_every: 50, degenerate_switch: 20 }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Free nonbasic variable parked at zero.
    Zero,
}

enum Outcome {
    Optimal,
    Unbounded,
}

enum Step {
    Unbounded,
    Flip(f64),
    Pivot { row: usize, t: f64, to_upper: bool },
}

/// Solves `lp` from scratch (phase 1 with artificials, then phase 2).
pub fn solve(lp: &LinearProgram) -> Result<BasicSolution, LpError> {
    solve_with(lp, SolveOptions::default())
}

pub(crate) fn solve_with(lp: &LinearProgram, opts: SolveOptions) -> Result<BasicSolution, LpError> {
    lp.validate()?;
    let mut engine = Engine::cold(lp, opts);
    engine.run()
}

/// Appends `row` to `lp` and re-optimizes, starting from the basis of
/// `previous` when it is usable. Falls back to a cold solve otherwise.
pub fn resolve_with_row(previous: &BasicSolution, lp: &mut LinearProgram, row: Row) -> Result<BasicSolution, LpError> {
    lp.rows.push(row);
    lp.validate()?;
    let opts = SolveOptions::default();
    if !previous.is_optimal() || previous.basis.len() + 1 != lp.num_rows() {
        return solve_with(lp, opts);
    }
    match Engine::warm(lp, previous, opts).and_then(|mut e| e.run()) {
        Ok(sol) => Ok(sol),
        Err(_) => solve_with(lp, opts),
    }
}

struct Engine<'a> {
    lp: &'a LinearProgram,
    opts: SolveOptions,
    n: usize,
    m: usize,
    /// Structural columns, column-major (`n * m`).
    cols: Vec<f64>,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<State>,
    value: Vec<f64>,
    basis: Vec<usize>,
    /// Explicit basis inverse, row-major `m * m`.
    binv: Vec<f64>,
    condition: f64,
    iterations: usize,
    since_refactor: usize,
    has_artificials: bool,
}

impl<'a> Engine<'a> {
    fn base(lp: &'a LinearProgram, opts: SolveOptions) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut cols = vec![0.0; n * m];
        for (i, row) in lp.rows.iter().enumerate() {
            for (j, &a) in row.coefficients.iter().enumerate() {
                cols[j * m + i] = a;
            }
        }
        let total = n + 2 * m;
        let mut lower = Vec::with_capacity(total);
        let mut upper = Vec::with_capacity(total);
        for b in &lp.bounds {
            lower.push(b.lower);
            upper.push(b.upper);
        }
        for row in &lp.rows {
            let (l, u) = match row.sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
        }
        lower.extend(std::iter::repeat(0.0).take(m));
        upper.extend(std::iter::repeat(0.0).take(m));
        Self {
            lp,
            opts,
            n,
            m,
            cols,
            art_sign: vec![1.0; m],
            lower,
            upper,
            state: vec![State::Lower; total],
            value: vec![0.0; total],
            basis: vec![0; m],
            binv: identity(m),
            condition: 1.0,
            iterations: 0,
            since_refactor: 0,
            has_artificials: false,
        }
    }

    fn park(&mut self, j: usize) {
        let (state, v) = if self.lower[j].is_finite() {
            (State::Lower, self.lower[j])
        } else if self.upper[j].is_finite() {
            (State::Upper, self.upper[j])
        } else {
            (State::Zero, 0.0)
        };
        self.state[j] = state;
        self.value[j] = v;
    }

    fn cold(lp: &'a LinearProgram, opts: SolveOptions) -> Self {
        let mut e = Self::base(lp, opts);
        let (n, m) = (e.n, e.m);
        for j in 0..n {
            e.park(j);
        }
        for i in 0..m {
            let activity: f64 = (0..n).map(|j| e.cols[j * m + i] * e.value[j]).sum();
            let residual = lp.rows[i].rhs - activity;
            let slack = n + i;
            if residual >= e.lower[slack] && residual <= e.upper[slack] {
                e.basis[i] = slack;
                e.state[slack] = State::Basic;
                e.value[slack] = residual;
            } else {
                let bound = residual.clamp(e.lower[slack], e.upper[slack]);
                e.state[slack] = if bound == e.upper[slack] && e.lower[slack] != e.upper[slack] { State::Upper } else { State::Lower };
                e.value[slack] = bound;
                let art = n + m + i;
                let sign = if residual > bound { 1.0 } else { -1.0 };
                e.art_sign[i] = sign;
                e.upper[art] = f64::INFINITY;
                e.basis[i] = art;
                e.state[art] = State::Basic;
                e.value[art] = (residual - bound).abs();
                e.binv[i * m + i] = sign;
                e.has_artificials = true;
            }
        }
        e
    }

    fn warm(lp: &'a LinearProgram, prev: &BasicSolution, opts: SolveOptions) -> Result<Self, LpError> {
        let mut e = Self::base(lp, opts);
        let (n, m) = (e.n, e.m);
        for j in 0..n + m - 1 {
            e.park(j);
            if prev.at_upper.get(j).copied().unwrap_or(false) && e.upper[j].is_finite() {
                e.state[j] = State::Upper;
                e.value[j] = e.upper[j];
            }
        }
        e.park(n + m - 1);
        e.basis[..m - 1].copy_from_slice(&prev.basis);
        e.basis[m - 1] = n + m - 1;
        for &b in &e.basis {
            if b >= n + m {
                return Err(LpError::SingularBasis);
            }
        }
        for k in 0..m {
            let b = e.basis[k];
            e.state[b] = State::Basic;
        }
        e.refactor()?;
        for k in 0..m - 1 {
            let b = e.basis[k];
            if e.bound_violation(b) > 1e-6 {
                return Err(LpError::SingularBasis);
            }
        }
        let slack = n + m - 1;
        let residual = e.value[slack];
        if e.bound_violation(slack) > 0.0 {
            let bound = residual.clamp(e.lower[slack], e.upper[slack]);
            e.state[slack] = if bound == e.upper[slack] && e.lower[slack] != e.upper[slack] { State::Upper } else { State::Lower };
            e.value[slack] = bound;
            let art = n + m + (m - 1);
            e.art_sign[m - 1] = if residual > bound { 1.0 } else { -1.0 };
            e.upper[art] = f64::INFINITY;
            e.state[art] = State::Basic;
            e.basis[m - 1] = art;
            e.has_artificials = true;
            e.refactor()?;
        }
        Ok(e)
    }

    fn run(&mut self) -> Result<BasicSolution, LpError> {
        let (n, m) = (self.n, self.m);
        if self.has_artificials {
            let mut cost = vec![0.0; n + 2 * m];
            for c in cost.iter_mut().skip(n + m) {
                *c = 1.0;
            }
            // phase 1 is bounded below by zero, so Unbounded cannot occur
            self.run_phase(&cost)?;
            let infeasibility: f64 = (n + m..n + 2 * m).filter(|&j| self.state[j] == State::Basic).map(|j| self.value[j]).sum();
            let scale = 1.0 + self.lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
            if infeasibility > FEASIBILITY_TOL * scale {
                return Ok(BasicSolution::without_basis(Status::Infeasible, n, self.iterations));
            }
            self.drive_out_artificials()?;
        }
        for j in n + m..n + 2 * m {
            self.upper[j] = 0.0;
        }
        let mut cost = vec![0.0; n + 2 * m];
        let sign = match self.lp.direction {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        };
        for j in 0..n {
            cost[j] = sign * self.lp.objective[j];
        }
        match self.run_phase(&cost)? {
            Outcome::Unbounded => Ok(BasicSolution::without_basis(Status::Unbounded, n, self.iterations)),
            Outcome::Optimal => Ok(self.finish(&cost, sign)),
        }
    }

    fn run_phase(&mut self, cost: &[f64]) -> Result<Outcome, LpError> {
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(LpError::IterationLimit(self.opts.max_iterations));
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            let pi = self.duals(cost);
            let bland = degenerate_run >= self.opts.degenerate_switch;
            let Some((q, dir)) = self.entering(cost, &pi, bland) else {
                if self.since_refactor == 0 {
                    return Ok(Outcome::Optimal);
                }
                self.refactor()?;
                continue;
            };
            let alpha = self.ftran(q);
            let t = match self.ratio_test(q, dir, &alpha, bland) {
                Step::Unbounded => {
                    if self.since_refactor == 0 {
                        return Ok(Outcome::Unbounded);
                    }
                    self.refactor()?;
                    continue;
                }
                Step::Flip(t) => {
                    self.shift(q, dir, t, &alpha);
                    if dir > 0.0 {
                        self.state[q] = State::Upper;
                        self.value[q] = self.upper[q];
                    } else {
                        self.state[q] = State::Lower;
                        self.value[q] = self.lower[q];
                    }
                    t
                }
                Step::Pivot { row, t, to_upper } => {
                    self.shift(q, dir, t, &alpha);
                    let leaving = self.basis[row];
                    if to_upper {
                        self.state[leaving] = State::Upper;
                        self.value[leaving] = self.upper[leaving];
                    } else {
                        self.state[leaving] = State::Lower;
                        self.value[leaving] = self.lower[leaving];
                    }
                    if leaving >= self.n + self.m {
                        self.upper[leaving] = 0.0;
                        self.state[leaving] = State::Lower;
                        self.value[leaving] = 0.0;
                    }
                    self.basis[row] = q;
                    self.state[q] = State::Basic;
                    self.eta_update(row, &alpha);
                    t
                }
            };
            self.iterations += 1;
            self.since_refactor += 1;
            if t <= DEGENERATE_STEP {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }

    fn shift(&mut self, q: usize, dir: f64, t: f64, alpha: &[f64]) {
        if t == 0.0 {
            return;
        }
        self.value[q] += dir * t;
        for (k, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                self.value[self.basis[k]] -= dir * t * a;
            }
        }
    }

    fn col_entry(&self, j: usize, i: usize) -> f64 {
        let (n, m) = (self.n, self.m);
        if j < n {
            self.cols[j * m + i]
        } else if j < n + m {
            if j - n == i {
                1.0
            } else {
                0.0
            }
        } else if j - n - m == i {
            self.art_sign[i]
        } else {
            0.0
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let mut alpha = vec![0.0; m];
        if j < n {
            let col = &self.cols[j * m..(j + 1) * m];
            for (k, out) in alpha.iter_mut().enumerate() {
                let row = &self.binv[k * m..(k + 1) * m];
                *out = row.iter().zip(col).map(|(a, b)| a * b).sum();
            }
        } else {
            let (i, s) = if j < n + m { (j - n, 1.0) } else { (j - n - m, self.art_sign[j - n - m]) };
            for (k, out) in alpha.iter_mut().enumerate() {
                *out = s * self.binv[k * m + i];
            }
        }
        alpha
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for k in 0..m {
            let c = cost[self.basis[k]];
            if c != 0.0 {
                let row = &self.binv[k * m..(k + 1) * m];
                for (p, b) in pi.iter_mut().zip(row) {
                    *p += c * b;
                }
            }
        }
        pi
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], pi: &[f64]) -> f64 {
        let (n, m) = (self.n, self.m);
        if j < n {
            let col = &self.cols[j * m..(j + 1) * m];
            cost[j] - pi.iter().zip(col).map(|(a, b)| a * b).sum::<f64>()
        } else if j < n + m {
            cost[j] - pi[j - n]
        } else {
            let i = j - n - m;
            cost[j] - self.art_sign[i] * pi[i]
        }
    }

    fn entering(&self, cost: &[f64], pi: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + 2 * self.m {
            let state = self.state[j];
            if state == State::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.reduced_cost(j, cost, pi);
            let dir = match state {
                State::Lower if d < -OPTIMALITY_TOL => 1.0,
                State::Upper if d > OPTIMALITY_TOL => -1.0,
                State::Zero if d.abs() > OPTIMALITY_TOL => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = d.abs();
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> Step {
        let mut best: Option<(usize, f64, bool)> = None;
        for (k, &a) in alpha.iter().enumerate() {
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let b = self.basis[k];
            let delta = -dir * a;
            let (limit, to_upper) = if delta < 0.0 {
                if !self.lower[b].is_finite() {
                    continue;
                }
                (((self.value[b] - self.lower[b]) / -delta).max(0.0), false)
            } else {
                if !self.upper[b].is_finite() {
                    continue;
                }
                (((self.upper[b] - self.value[b]) / delta).max(0.0), true)
            };
            let replace = match best {
                None => true,
                Some((bk, bt, _)) => {
                    let eps = 1e-12 * (1.0 + bt.abs());
                    if limit < bt - eps {
                        true
                    } else if limit <= bt + eps {
                        if bland {
                            b < self.basis[bk]
                        } else {
                            let (ab, aa) = (alpha[bk].abs(), a.abs());
                            aa > ab || (aa == ab && b < self.basis[bk])
                        }
                    } else {
                        false
                    }
                }
            };
            if replace {
                best = Some((k, limit, to_upper));
            }
        }
        let range = self.upper[q] - self.lower[q];
        match best {
            Some((_, t, _)) if range.is_finite() && range <= t => Step::Flip(range),
            Some((row, t, to_upper)) => Step::Pivot { row, t, to_upper },
            None if range.is_finite() => Step::Flip(range),
            None => Step::Unbounded,
        }
    }

    fn eta_update(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        for v in &mut self.binv[r * m..(r + 1) * m] {
            *v /= piv;
        }
        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for (k, &f) in alpha.iter().enumerate() {
            if k == r || f == 0.0 {
                continue;
            }
            for (v, p) in self.binv[k * m..(k + 1) * m].iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination with partial
    /// pivoting and recomputes basic values from the nonbasic ones.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        let width = 2 * m;
        let mut aug = vec![0.0; m * width];
        for (k, &col) in self.basis.iter().enumerate() {
            for i in 0..m {
                aug[i * width + k] = self.col_entry(col, i);
            }
        }
        for i in 0..m {
            aug[i * width + m + i] = 1.0;
        }
        let mut max_pivot: f64 = 0.0;
        let mut min_pivot = f64::INFINITY;
        for c in 0..m {
            let p = (c..m).max_by(|&a, &b| aug[a * width + c].abs().total_cmp(&aug[b * width + c].abs()).then(b.cmp(&a))).unwrap();
            let pv = aug[p * width + c];
            if pv.abs() < 1e-300 {
                return Err(LpError::SingularBasis);
            }
            max_pivot = max_pivot.max(pv.abs());
            min_pivot = min_pivot.min(pv.abs());
            if p != c {
                for t in 0..width {
                    aug.swap(p * width + t, c * width + t);
                }
            }
            let inv = 1.0 / pv;
            for t in 0..width {
                aug[c * width + t] *= inv;
            }
            let pivot_row: Vec<f64> = aug[c * width..(c + 1) * width].to_vec();
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = aug[r * width + c];
                if f != 0.0 {
                    for (v, p) in aug[r * width..(r + 1) * width].iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
        self.condition = max_pivot / min_pivot;
        if self.condition > MAX_CONDITION {
            return Err(LpError::NumericalBreakdown { condition: self.condition });
        }
        for i in 0..m {
            self.binv[i * m..(i + 1) * m].copy_from_slice(&aug[i * width + m..(i + 1) * width]);
        }
        let mut rhs: Vec<f64> = self.lp.rows.iter().map(|r| r.rhs).collect();
        for j in 0..self.n + 2 * self.m {
            if self.state[j] == State::Basic || self.value[j] == 0.0 {
                continue;
            }
            for (i, r) in rhs.iter_mut().enumerate() {
                *r -= self.col_entry(j, i) * self.value[j];
            }
        }
        for k in 0..m {
            let row = &self.binv[k * m..(k + 1) * m];
            self.value[self.basis[k]] = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }

    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        let (n, m) = (self.n, self.m);
        let mut changed = false;
        for r in 0..m {
            let art = self.basis[r];
            if art < n + m {
                continue;
            }
            let rho = &self.binv[r * m..(r + 1) * m];
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n + m {
                if self.state[j] == State::Basic {
                    continue;
                }
                let entry: f64 = (0..m).map(|i| rho[i] * self.col_entry(j, i)).sum();
                if entry.abs() > PIVOT_TOL && best.map_or(true, |(_, e)| entry.abs() > e) {
                    best = Some((j, entry.abs()));
                }
            }
            let Some((j, _)) = best else {
                return Err(LpError::SingularBasis);
            };
            self.basis[r] = j;
            self.state[j] = State::Basic;
            self.state[art] = State::Lower;
            self.value[art] = 0.0;
            self.upper[art] = 0.0;
            self.refactor()?;
            changed = true;
        }
        if changed {
            self.refactor()?;
        }
        Ok(())
    }

    fn bound_violation(&self, j: usize) -> f64 {
        (self.lower[j] - self.value[j]).max(self.value[j] - self.upper[j]).max(0.0)
    }

    fn finish(&self, cost: &[f64], sign: f64) -> BasicSolution {
        let (n, m) = (self.n, self.m);
        let x: Vec<f64> = self.value[..n].to_vec();
        let pi = self.duals(cost);
        // dual objective of the min-form program: pi·b plus bound terms
        let mut dual = pi.iter().zip(&self.lp.rows).map(|(p, r)| p * r.rhs).sum::<f64>();
        for j in 0..n + m {
            if self.state[j] == State::Basic {
                continue;
            }
            let d = self.reduced_cost(j, cost, &pi);
            dual += d * self.value[j];
        }
        let mut at_upper = vec![false; n + m];
        for (j, flag) in at_upper.iter_mut().enumerate() {
            *flag = self.state[j] == State::Upper;
        }
        BasicSolution {
            status: Status::Optimal,
            objective_value: self.lp.objective_at(&x),
            x,
            basis: self.basis.clone(),
            at_upper,
            duals: pi.iter().map(|p| sign * p).collect(),
            dual_objective: sign * dual,
            condition_estimate: self.condition,
            iterations: self.iterations,
        }
    }
}

fn identity(m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    v
}

/// Basis inverse for an optimal solution, recomputed from `lp`.
pub(crate) fn basis_inverse(lp: &LinearProgram, sol: &BasicSolution) -> Result<(Vec<f64>, f64), LpError> {
    if !sol.is_optimal() {
        return Err(LpError::NotOptimal);
    }
    let mut e = Engine::base(lp, SolveOptions::default());
    if sol.basis.len() != e.m || sol.basis.iter().any(|&b| b >= e.n + e.m) {
        return Err(LpError::SingularBasis);
    }
    e.basis.copy_from_slice(&sol.basis);
    for &b in &sol.basis {
        e.state[b] = State::Basic;
    }
    e.refactor()?;
    Ok((e.binv, e.condition))
}
