use super::simplex::basis_inverse;
use super::{dot, BasicSolution, LinearProgram, LpError, RowSense};

/// `coefficients · z + constant` over the structural variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub coefficients: Vec<f64>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn eval(&self, z: &[f64]) -> f64 {
        dot(&self.coefficients, z) + self.constant
    }
}

/// Edge direction obtained by moving one nonbasic variable off its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    /// Column of the nonbasic variable (structural `< n`, slack `n + row`).
    pub column: usize,
    pub at_upper: bool,
    /// Direction in structural-variable space.
    pub direction: Vec<f64>,
    /// Distance of the nonbasic variable from its bound, as an affine
    /// function of the structural variables. Zero at the apex, nonnegative
    /// on the feasible region, and increases by one per unit step along
    /// `direction`.
    pub nonbasic: AffineExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableauRays {
    pub apex: Vec<f64>,
    pub rays: Vec<Ray>,
    pub basis_condition_estimate: f64,
}

impl TableauRays {
    pub fn dim(&self) -> usize {
        self.apex.len()
    }
}

/// Rays of the translated simplicial cone at an optimal vertex: one per
/// nonbasic variable that is not fixed.
pub fn extract_rays(solution: &BasicSolution, lp: &LinearProgram) -> Result<TableauRays, LpError> {
    let (binv, condition) = basis_inverse(lp, solution)?;
    let n = lp.num_vars();
    let m = lp.num_rows();
    let mut is_basic = vec![false; n + m];
    for &b in &solution.basis {
        is_basic[b] = true;
    }
    let mut rays = Vec::new();
    for column in 0..n + m {
        if is_basic[column] {
            continue;
        }
        let (lower, upper) = if column < n {
            (lp.bounds[column].lower, lp.bounds[column].upper)
        } else {
            match lp.rows[column - n].sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            }
        };
        if lower == upper {
            continue;
        }
        let at_upper = solution.at_upper.get(column).copied().unwrap_or(false);
        let (sign, bound) = if at_upper {
            (-1.0, upper)
        } else if lower.is_finite() {
            (1.0, lower)
        } else {
            return Err(LpError::FreeNonbasic(column));
        };

        let mut alpha = vec![0.0; m];
        for (k, a) in alpha.iter_mut().enumerate() {
            let row = &binv[k * m..(k + 1) * m];
            *a = if column < n {
                (0..m).map(|i| row[i] * lp.rows[i].coefficients[column]).sum()
            } else {
                row[column - n]
            };
        }
        let mut direction = vec![0.0; n];
        if column < n {
            direction[column] = sign;
        }
        for (k, &b) in solution.basis.iter().enumerate() {
            if b < n {
                direction[b] = -sign * alpha[k];
            }
        }

        let nonbasic = if column < n {
            let mut coefficients = vec![0.0; n];
            coefficients[column] = sign;
            AffineExpr { coefficients, constant: -sign * bound }
        } else {
            let row = &lp.rows[column - n];
            AffineExpr {
                coefficients: row.coefficients.iter().map(|a| -sign * a).collect(),
                constant: sign * (row.rhs - bound),
            }
        };
        rays.push(Ray { column, at_upper, direction, nonbasic });
    }
    Ok(TableauRays { apex: solution.x.clone(), rays, basis_condition_estimate: condition })
}
