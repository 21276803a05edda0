use ntulp::game::{int, Game};
use ntulp::membership::{least_objection, Budget, CoalitionPool, ObjectionMode};
use ntulp::oracle::is_blocked_exact;
use proptest::prelude::*;

fn game_strategy() -> impl Strategy<Value = (Game, Vec<f64>)> {
    (1usize..=5, 1usize..=3, 1usize..=2).prop_flat_map(|(n, j, k)| {
        (
            prop::collection::vec(prop::collection::vec(0i64..4, j), k),
            prop::collection::vec(prop::collection::vec(0i64..4, k), n),
            prop::collection::vec(prop::collection::vec(-2i64..6, j), n),
            prop::collection::vec(0.0f64..1.0, j),
            prop::collection::vec(0.0f64..1.5, n),
        )
            .prop_map(move |(mut a, b, v, w, slack)| {
                for col in 0..j {
                    a[0][col] = a[0][col].max(1);
                }
                let to_q = |m: Vec<Vec<i64>>| m.into_iter().map(|r| r.into_iter().map(int).collect()).collect();
                let game = Game::new(to_q(a), to_q(b), to_q(v)).unwrap();
                // A plan inside X(N): scale the random direction onto the budget.
                let budget = game.pooled_endowment_f64(&game.grand()).unwrap();
                let scale = game
                    .a_f64()
                    .iter()
                    .zip(&budget)
                    .map(|(row, &bk)| {
                        let used: f64 = row.iter().zip(&w).map(|(x, y)| x * y).sum();
                        if used > 0.0 { bk / used } else { f64::INFINITY }
                    })
                    .fold(f64::INFINITY, f64::min);
                let x: Vec<f64> = w.iter().map(|&t| if scale.is_finite() { t * scale } else { 0.0 }).collect();
                let u: Vec<f64> = game.utilities(&x).iter().zip(&slack).map(|(u, d)| u - d).collect();
                (game, u)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn branch_and_bound_matches_enumeration((game, u) in game_strategy()) {
        let mode = ObjectionMode::additive();
        let r = least_objection(&game, &u, mode, &CoalitionPool::new(), Budget::default()).unwrap();
        let v = is_blocked_exact(&game, &u).unwrap();
        let oracle_eps = v.epsilon().max(0.0);
        prop_assert!((r.epsilon() - oracle_eps).abs() < 1e-6, "bb {} oracle {}", r.epsilon(), oracle_eps);
        prop_assert_eq!(v.blocked, r.epsilon() > 1e-6);
        // The certificate is self-consistent.
        let o = &r.objection;
        let budget = game.pooled_endowment_f64(&o.coalition).unwrap();
        prop_assert!(game.plan_fits(&o.plan, &budget, 1e-7));
        for (&i, &ui) in o.coalition.members().iter().zip(&o.utilities) {
            prop_assert!(ui <= game.evaluate_utility(i, &o.plan).unwrap() + 1e-7);
            prop_assert!(o.epsilon <= ui - u[i] + 1e-7);
        }
    }
}
