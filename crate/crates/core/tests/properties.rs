use ntulp::game::{int, ratio, to_f64, Coalition, Game};
use ntulp::instances::{
    accessibility, gen_cyclic, gen_grid_city, gen_random_game, gen_transit_game, load_game, read_scenario, save_game,
    write_scenario, GridCitySpec, RandomGameSpec,
};
use ntulp::optimizer::{solve_over_core, unconstrained_optimum, welfare, Objective, RunConfig, RunStatus, WelfareKind};
use ntulp::oracle::is_blocked_exact;
use proptest::prelude::*;

fn small_game() -> impl Strategy<Value = Game> {
    (2usize..=4, 1usize..=3, 1usize..=2, any::<u64>()).prop_map(|(players, goods, resources, seed)| {
        gen_random_game(RandomGameSpec { players, goods, resources, nonnegative_valuations: true }, seed).unwrap()
    })
}

fn objective() -> impl Strategy<Value = Objective> {
    prop_oneof![Just(Objective::Utilitarian), Just(Objective::maximin())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn converged_solutions_are_unblocked_and_rational(game in small_game(), objective in objective()) {
        let config = RunConfig { objective, ..RunConfig::default() };
        let out = solve_over_core(&game, &config).unwrap();
        prop_assert_eq!(out.status, RunStatus::Converged);
        // Independent check by enumerating coalitions.
        let verdict = is_blocked_exact(&game, &out.utilities).unwrap();
        prop_assert!(verdict.epsilon() <= config.delta + 1e-6, "epsilon {}", verdict.epsilon());
        for i in 0..game.num_players() {
            let (_, alone) = game.best_plan(i, &Coalition::singleton(i)).unwrap();
            prop_assert!(out.utilities[i] >= alone - 1e-6, "player {i}: {} < {alone}", out.utilities[i]);
        }
        // Utilities come from a plan the grand coalition can afford.
        let budget = game.pooled_endowment_f64(&game.grand()).unwrap();
        prop_assert!(game.plan_fits(&out.plan, &budget, 1e-6));
        let implied = game.utilities(&out.plan);
        for (u, v) in out.utilities.iter().zip(&implied) {
            prop_assert!(u <= &(v + 1e-6));
        }
    }

    #[test]
    fn cooperation_never_beats_the_unconstrained_optimum(game in small_game(), objective in objective()) {
        let config = RunConfig { objective: objective.clone(), ..RunConfig::default() };
        let out = solve_over_core(&game, &config).unwrap();
        let (_, free, _) = unconstrained_optimum(&game, &config).unwrap();
        let kind = match objective {
            Objective::Utilitarian => WelfareKind::Utilitarian,
            _ => WelfareKind::Maximin,
        };
        prop_assert!(welfare(&out.utilities, kind) <= welfare(&free, kind) + 1e-6);
    }

    #[test]
    fn accepted_cuts_separate_their_vertex(game in small_game()) {
        let config = RunConfig { objective: Objective::Utilitarian, max_iterations: 20, ..RunConfig::default() };
        let out = solve_over_core(&game, &config).unwrap();
        for cut in &out.cuts {
            prop_assert!(cut.violation(&cut.vertex) >= 1e-7);
        }
    }

    #[test]
    fn game_json_round_trips(game in small_game()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("game.json");
        save_game(&game, &path).unwrap();
        prop_assert_eq!(load_game(&path).unwrap(), game);
    }

    #[test]
    fn accessibility_is_monotone(a in 0.0f64..3000.0, b in 0.0f64..3000.0) {
        let (near, far) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (accessibility(near).unwrap(), accessibility(far).unwrap());
        prop_assert!(x >= y);
        prop_assert!((0.0..=1.0).contains(&x));
    }

    #[test]
    fn grid_city_valuations_are_scores(seed in any::<u64>(), lines in 1usize..6, riders in 1usize..20) {
        let spec = GridCitySpec { seed, width: 6, height: 5, lines, riders };
        let scenario = gen_grid_city(spec).unwrap();
        let Ok(game) = gen_transit_game(&scenario) else { return Ok(()) };
        prop_assert!(game.num_players() <= riders);
        for i in 0..game.num_players() {
            let v = game.v_f64(i);
            prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert!(v.iter().any(|&x| x > 0.0));
        }
        let dir = tempfile::tempdir().unwrap();
        write_scenario(&scenario, dir.path()).unwrap();
        prop_assert_eq!(read_scenario(dir.path()).unwrap(), scenario);
    }
}

#[test]
fn cyclic_valuations_are_powers() {
    let t = [int(2), ratio(5, 2), int(4)];
    let game = gen_cyclic(3, &t).unwrap();
    for i in 0..3 {
        for (j, tj) in t.iter().enumerate() {
            assert_eq!(game.v_f64(i)[j], to_f64(tj).powi(i as i32 + 1));
        }
    }
}
