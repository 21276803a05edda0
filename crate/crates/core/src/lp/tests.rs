use super::*;
use proptest::prelude::*;

/// Brute-force vertex enumeration: intersect every `n`-subset of the
/// tight-able constraints (rows and finite bounds) and keep feasible points.
fn enumerate_vertices(lp: &LinearProgram) -> Vec<Vec<f64>> {
    let n = lp.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = lp.rows.iter().map(|r| (r.coefficients.clone(), r.rhs)).collect();
    for (j, b) in lp.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if b.lower.is_finite() {
            planes.push((e.clone(), b.lower));
        }
        if b.upper.is_finite() {
            planes.push((e, b.upper));
        }
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let k = planes.len();
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        return out;
    }
    loop {
        if let Some(x) = solve_square(&idx.iter().map(|&i| planes[i].clone()).collect::<Vec<_>>()) {
            if lp.is_feasible(&x, 1e-9) && !out.iter().any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9)) {
                out.push(x);
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for t in i + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve_square(eqs: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = eqs.len();
    let mut a: Vec<Vec<f64>> = eqs.iter().map(|(c, r)| c.iter().copied().chain([*r]).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for t in c..=n {
                    a[r][t] -= f * a[c][t];
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

fn lp2(objective: Vec<f64>, rows: &[(&[f64], RowSense, f64)]) -> LinearProgram {
    let mut lp = LinearProgram::maximize(objective);
    for (c, s, r) in rows {
        lp.add_row(c.to_vec(), *s, *r);
    }
    lp
}

#[test]
fn max_single_coordinate_on_simplex() {
    let lp = lp2(vec![1.0, 0.0], &[(&[1.0, 1.0], RowSense::Le, 1.0)]);
    let sol = solve(&lp).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.x[0] - 1.0).abs() < 1e-12 && sol.x[1].abs() < 1e-12);
    assert!((sol.objective_value - 1.0).abs() < 1e-12);
}

#[test]
fn infeasible_bound_conflict() {
    let lp = lp2(vec![0.0], &[(&[1.0], RowSense::Le, -1.0)]);
    assert_eq!(solve(&lp).unwrap().status, Status::Infeasible);
}

#[test]
fn unbounded_ray() {
    let lp = lp2(vec![1.0, 1.0], &[(&[1.0, -1.0], RowSense::Le, 1.0)]);
    assert_eq!(solve(&lp).unwrap().status, Status::Unbounded);
}

#[test]
fn equality_ge_and_free_variables() {
    // max x + y  s.t.  x - y = 1, x + y >= 0, x <= 3, y free
    let mut lp = lp2(vec![1.0, 1.0], &[(&[1.0, -1.0], RowSense::Eq, 1.0), (&[1.0, 1.0], RowSense::Ge, 0.0)]);
    lp.set_bounds(0, f64::NEG_INFINITY, 3.0);
    lp.set_bounds(1, f64::NEG_INFINITY, f64::INFINITY);
    let sol = solve(&lp).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.x[0] - 3.0).abs() < 1e-9 && (sol.x[1] - 2.0).abs() < 1e-9);
    assert!((sol.objective_value - sol.dual_objective).abs() < 1e-6);
}

#[test]
fn minimize_with_lower_bounds() {
    // min x + 2y s.t. x + y >= 2, x <= 1.5
    let mut lp = LinearProgram::minimize(vec![1.0, 2.0]);
    lp.add_row(vec![1.0, 1.0], RowSense::Ge, 2.0);
    lp.set_bounds(0, 0.0, 1.5);
    let sol = solve(&lp).unwrap();
    assert!((sol.objective_value - 2.5).abs() < 1e-9);
    assert!((sol.objective_value - sol.dual_objective).abs() < 1e-9);
}

#[test]
fn redundant_row_keeps_solution() {
    let mut lp = lp2(vec![1.0, 0.0], &[(&[1.0, 1.0], RowSense::Le, 1.0)]);
    let sol = solve(&lp).unwrap();
    let again = resolve_with_row(&sol, &mut lp, Row::new(vec![0.0, 0.0], RowSense::Le, 1.0)).unwrap();
    assert_eq!(again.status, Status::Optimal);
    assert_eq!(again.x, sol.x);
    assert_eq!(again.objective_value, sol.objective_value);
}

#[test]
fn cut_removing_vertex_moves_to_worse_vertex() {
    // polygon: x + y <= 4, x <= 3, y <= 3; max 2x + y -> (3, 1), value 7
    let mut lp = lp2(vec![2.0, 1.0], &[(&[1.0, 1.0], RowSense::Le, 4.0)]);
    lp.set_bounds(0, 0.0, 3.0);
    lp.set_bounds(1, 0.0, 3.0);
    let sol = solve(&lp).unwrap();
    assert!((sol.objective_value - 7.0).abs() < 1e-9);
    let cut = Row::new(vec![1.0, 0.0], RowSense::Le, 2.0);
    let warm = resolve_with_row(&sol, &mut lp, cut).unwrap();
    // oracle: vertices of the cut polygon
    let best = enumerate_vertices(&lp).iter().map(|v| 2.0 * v[0] + v[1]).fold(f64::NEG_INFINITY, f64::max);
    assert!((best - 6.0).abs() < 1e-9);
    assert!((warm.objective_value - best).abs() < 1e-9);
    assert!(warm.objective_value < sol.objective_value);
    let cold = solve(&lp).unwrap();
    assert!((cold.objective_value - warm.objective_value).abs() < 1e-6);
}

#[test]
fn infeasible_row_after_warm_start() {
    let mut lp = lp2(vec![1.0, 0.0], &[(&[1.0, 1.0], RowSense::Le, 1.0)]);
    let sol = solve(&lp).unwrap();
    let res = resolve_with_row(&sol, &mut lp, Row::new(vec![0.0, 0.0], RowSense::Le, -1.0)).unwrap();
    assert_eq!(res.status, Status::Infeasible);
}

#[test]
fn rays_of_unit_box() {
    let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
    lp.add_row(vec![1.0, 0.0], RowSense::Le, 1.0);
    lp.add_row(vec![0.0, 1.0], RowSense::Le, 1.0);
    let sol = solve(&lp).unwrap();
    let rays = extract_rays(&sol, &lp).unwrap();
    let mut dirs: Vec<Vec<f64>> = rays.rays.iter().map(|r| r.direction.clone()).collect();
    dirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(dirs, vec![vec![-1.0, 0.0], vec![0.0, -1.0]]);
}

#[test]
fn rays_of_standard_simplex_at_first_vertex() {
    let lp = lp2(vec![1.0, 0.0], &[(&[1.0, 1.0], RowSense::Le, 1.0)]);
    let sol = solve(&lp).unwrap();
    let rays = extract_rays(&sol, &lp).unwrap();
    let mut dirs: Vec<Vec<f64>> = rays.rays.iter().map(|r| r.direction.clone()).collect();
    dirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(dirs, vec![vec![-1.0, 0.0], vec![-1.0, 1.0]]);
}

#[test]
fn degenerate_vertex_rays_still_contain_polygon() {
    // triangle x >= 0, y >= 0, x + y <= 1 with a duplicated constraint 2x + 2y <= 2
    let mut lp = lp2(vec![1.0, 0.0], &[(&[1.0, 1.0], RowSense::Le, 1.0), (&[2.0, 2.0], RowSense::Le, 2.0)]);
    lp.add_row(vec![1.0, 0.0], RowSense::Le, 1.0);
    let sol = solve(&lp).unwrap();
    let rays = extract_rays(&sol, &lp).unwrap();
    let nonbasic = lp.num_vars();
    assert_eq!(rays.rays.len(), nonbasic);
    for v in enumerate_vertices(&lp) {
        assert_in_cone(&rays, &v);
    }
}

fn assert_in_cone(rays: &TableauRays, v: &[f64]) {
    let mut rebuilt = rays.apex.clone();
    for r in &rays.rays {
        let lambda = r.nonbasic.eval(v);
        assert!(lambda >= -1e-7, "negative cone multiplier {lambda} for {v:?}");
        for (z, d) in rebuilt.iter_mut().zip(&r.direction) {
            *z += lambda * d;
        }
    }
    for (a, b) in rebuilt.iter().zip(v) {
        assert!((a - b).abs() < 1e-6, "vertex {v:?} rebuilt as {rebuilt:?}");
    }
}

#[test]
fn lp_text_dump_lists_rows_and_bounds() {
    let mut lp = lp2(vec![1.0, -2.0], &[(&[1.0, 1.0], RowSense::Le, 1.0)]);
    lp.set_bounds(1, f64::NEG_INFINITY, f64::INFINITY);
    let text = lp.to_lp_text();
    assert!(text.starts_with("Maximize"));
    assert!(text.contains("c0: + 1 x0 + 1 x1 <= 1"));
    assert!(text.contains("x1 free"));
}

#[test]
fn validation_rejects_bad_shapes() {
    let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
    lp.add_row(vec![1.0], RowSense::Le, 1.0);
    assert!(matches!(solve(&lp), Err(LpError::DimensionMismatch { .. })));
    let mut lp = LinearProgram::maximize(vec![1.0]);
    lp.set_bounds(0, 2.0, 1.0);
    assert!(matches!(solve(&lp), Err(LpError::InvalidBounds { .. })));
}

fn random_lp() -> impl Strategy<Value = LinearProgram> {
    (2usize..=3)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(-3i32..=3, n),
                prop::collection::vec((prop::collection::vec(-4i32..=4, n), 0u8..3, -2i32..=8), 1..6),
                prop::collection::vec((-3i32..=0, 1i32..=4), n),
                any::<bool>(),
            )
        })
        .prop_map(|(n, obj, rows, bounds, maximize)| {
            let objective = obj.into_iter().map(f64::from).collect();
            let mut lp = LinearProgram::new(if maximize { Direction::Maximize } else { Direction::Minimize }, objective);
            for (c, s, r) in rows {
                let sense = match s {
                    0 => RowSense::Le,
                    1 => RowSense::Ge,
                    _ => RowSense::Le,
                };
                lp.add_row(c.into_iter().map(f64::from).collect(), sense, f64::from(r));
            }
            for (j, (l, u)) in bounds.into_iter().enumerate().take(n) {
                lp.set_bounds(j, f64::from(l), f64::from(u));
            }
            lp
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplex_matches_vertex_enumeration(lp in random_lp()) {
        let sol = solve(&lp).unwrap();
        let vertices = enumerate_vertices(&lp);
        if vertices.is_empty() {
            prop_assert_eq!(sol.status, Status::Infeasible);
        } else {
            prop_assert_eq!(sol.status, Status::Optimal);
            let values = vertices.iter().map(|v| lp.objective_at(v));
            let best = match lp.direction {
                Direction::Maximize => values.fold(f64::NEG_INFINITY, f64::max),
                Direction::Minimize => values.fold(f64::INFINITY, f64::min),
            };
            prop_assert!((sol.objective_value - best).abs() < 1e-6);
            prop_assert!(lp.is_feasible(&sol.x, 1e-7));
            prop_assert!((sol.objective_value - sol.dual_objective).abs() < 1e-6);
        }
    }

    #[test]
    fn tableau_cone_contains_every_vertex(lp in random_lp()) {
        let sol = solve(&lp).unwrap();
        if sol.is_optimal() {
            let rays = extract_rays(&sol, &lp).unwrap();
            for v in enumerate_vertices(&lp) {
                let mut rebuilt = rays.apex.clone();
                for r in &rays.rays {
                    let lambda = r.nonbasic.eval(&v);
                    prop_assert!(lambda >= -1e-7);
                    for (z, d) in rebuilt.iter_mut().zip(&r.direction) {
                        *z += lambda * d;
                    }
                }
                for (a, b) in rebuilt.iter().zip(&v) {
                    prop_assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn repeated_solves_are_bit_identical(lp in random_lp()) {
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn warm_resolve_agrees_with_cold(lp in random_lp(), cut in (prop::collection::vec(-3i32..=3, 3), -2i32..=6)) {
        let sol = solve(&lp).unwrap();
        prop_assume!(sol.is_optimal());
        let n = lp.num_vars();
        let row = Row::new(cut.0.into_iter().take(n).map(f64::from).collect(), RowSense::Le, f64::from(cut.1));
        let mut warm_lp = lp.clone();
        let warm = resolve_with_row(&sol, &mut warm_lp, row).unwrap();
        let cold = solve(&warm_lp).unwrap();
        prop_assert_eq!(warm.status, cold.status);
        if cold.is_optimal() {
            prop_assert!((warm.objective_value - cold.objective_value).abs() < 1e-6);
        }
    }
}
