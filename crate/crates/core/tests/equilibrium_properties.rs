mod common;

use common::fixture;
use pmugame::equilibrium::{
    exp3_selfplay, exp3_step, expected_payoff, exploitability, solve_minimax, Exp3Params,
    Exp3Schedule, Exp3State, MixedStrategy, SelfPlayConfig,
};
use pmugame::scenario::{Scenario, ScenarioConfig};
use pmugame::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NE_TOL: f64 = 1e-7;

fn random_matrix(rng: &mut impl Rng) -> Matrix {
    let rows = rng.gen_range(1..=20);
    let cols = rng.gen_range(1..=10);
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen::<f64>()).collect(),
    )
}

/// No pure deviation gains more than `tol` against the profile.
fn assert_equilibrium(m: &Matrix, a: &MixedStrategy, d: &MixedStrategy, value: f64, tol: f64) {
    for (i, row) in m.mul_vec(d.probabilities()).iter().enumerate() {
        assert!(*row <= value + tol, "attacker row {i}: {row} > {value}");
    }
    for (j, col) in m.vec_mul(a.probabilities()).iter().enumerate() {
        assert!(*col >= value - tol, "defender column {j}: {col} < {value}");
    }
}

fn assert_simplex(s: &MixedStrategy) {
    assert!(s.probabilities().iter().all(|p| *p >= 0.0));
    assert!((s.probabilities().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
}

#[test]
fn random_matrices_satisfy_duality_and_equilibrium() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let m = random_matrix(&mut rng);
        let r = solve_minimax(&m).unwrap();
        assert!(r.gap <= NE_TOL, "gap {}", r.gap);
        assert!((r.maximin - r.minimax).abs() <= NE_TOL);
        assert_simplex(&r.attacker);
        assert_simplex(&r.defender);
        assert_equilibrium(&m, &r.attacker, &r.defender, r.value, NE_TOL);
        assert!(exploitability(&m, &r.attacker, &r.defender).unwrap() <= NE_TOL);
    }
}

#[test]
fn ieee14_equilibria_pass_the_deviation_check() {
    for zib in [false, true] {
        let s = Scenario::build(fixture("ieee14.grid"), ScenarioConfig::new(zib)).unwrap();
        let m = s.matrix.values();
        let r = solve_minimax(m).unwrap();
        // payoffs are around 1e-2, so compare relative to the value
        assert!(r.gap <= NE_TOL * r.value);
        assert_equilibrium(m, &r.attacker, &r.defender, r.value, NE_TOL * r.value);
        let v = expected_payoff(m, &r.attacker, &r.defender).unwrap();
        assert!((v - r.value).abs() <= 1e-12);
    }
}

#[test]
fn exp3_estimator_is_unbiased_without_bias_term() {
    // reach a non-uniform distribution first
    let mut state = Exp3State::new(3);
    let warm = Exp3Params {
        eta: 0.3,
        gamma: 0.2,
        beta: 0.0,
    };
    for (a, r) in [(0, 0.9), (2, 0.4), (0, 0.7), (1, 0.1)] {
        state = exp3_step(&state, a, r, warm).unwrap();
    }
    let sigma = state.current();
    assert!(sigma.max_abs_diff(&MixedStrategy::uniform(3)) > 0.01);
    let rewards = [0.25, 0.8, 0.55];
    let eta = 0.5;
    let params = Exp3Params {
        eta,
        gamma: 0.1,
        beta: 0.0,
    };
    let mut expected = [0.0; 3];
    for (chosen, reward) in rewards.iter().enumerate() {
        let next = exp3_step(&state, chosen, *reward, params).unwrap();
        for (a, e) in expected.iter_mut().enumerate() {
            let estimate = (next.scores()[a] - state.scores()[a]) / eta;
            *e += sigma.get(chosen) * estimate;
        }
    }
    for (e, r) in expected.iter().zip(rewards) {
        assert!((e - r).abs() < 1e-12, "{e} vs {r}");
    }
}

#[test]
fn exp3_matching_pennies_reaches_the_center() {
    let m = Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]);
    let r = exp3_selfplay(&m, &SelfPlayConfig::new(100_000, 11)).unwrap();
    let half = MixedStrategy::uniform(2);
    assert!(r.attacker.max_abs_diff(&half) <= 0.05, "{:?}", r.attacker);
    assert!(r.defender.max_abs_diff(&half) <= 0.05, "{:?}", r.defender);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn exp3_exploitability_falls_with_more_rounds() {
    let s = Scenario::build(fixture("ieee14.grid"), ScenarioConfig::new(false)).unwrap();
    let m = s.matrix.values();
    let run = |t: u64| {
        median(
            (0..20)
                .map(|seed| {
                    exp3_selfplay(m, &SelfPlayConfig::new(t, seed))
                        .unwrap()
                        .exploitability
                })
                .collect(),
        )
    };
    let (short, long) = (run(1_000), run(100_000));
    assert!(
        long < short,
        "T=1e5 median {long} not below T=1e3 median {short}"
    );
}

#[test]
fn anytime_schedule_runs_and_stays_on_the_simplex() {
    let m = Matrix::from_rows(&[[0.2, 0.9, 0.0], [0.6, 0.1, 0.4]]);
    let r = exp3_selfplay(
        &m,
        &SelfPlayConfig::new(5_000, 5).with_schedule(Exp3Schedule::anytime()),
    )
    .unwrap();
    assert_simplex(&r.attacker);
    assert_simplex(&r.defender);
    assert_simplex(&r.attacker_last);
    assert!(r.trace.windows(2).all(|w| w[0].t < w[1].t));
    assert_eq!(r.trace.last().unwrap().t, 5_000);
}

#[test]
fn invalid_schedules_are_rejected() {
    let m = Matrix::from_rows(&[[0.0, 1.0]]);
    let bad = Exp3Schedule {
        eta_scale: 0.0,
        ..Exp3Schedule::horizon()
    };
    assert!(exp3_selfplay(&m, &SelfPlayConfig::new(10, 1).with_schedule(bad)).is_err());
}

fn arb_matrix() -> impl Strategy<Value = Matrix> {
    (1usize..=8, 1usize..=6).prop_flat_map(|(r, c)| {
        prop::collection::vec(-1.0f64..1.0, r * c).prop_map(move |v| Matrix::from_vec(r, c, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scaling_keeps_strategies_and_scales_value(m in arb_matrix(), c in 0.01f64..100.0) {
        let r = solve_minimax(&m).unwrap();
        let rs = solve_minimax(&m.map(|v| v * c)).unwrap();
        prop_assert!(r.attacker.max_abs_diff(&rs.attacker) < 1e-9);
        prop_assert!(r.defender.max_abs_diff(&rs.defender) < 1e-9);
        prop_assert!((rs.value - c * r.value).abs() <= 1e-9 * c.max(1.0));
    }

    #[test]
    fn exp3_steps_stay_on_the_simplex(
        steps in prop::collection::vec((0usize..5, 0.0f64..=1.0, 0.001f64..1.0, 0.001f64..=1.0, 0.0f64..1.0), 1..60)
    ) {
        let mut state = Exp3State::new(5);
        for (a, r, eta, gamma, beta) in steps {
            state = exp3_step(&state, a, r, Exp3Params { eta, gamma, beta }).unwrap();
            assert_simplex(&state.current());
            assert_simplex(&state.empirical());
            prop_assert!(state.current().probabilities().iter().all(|p| *p >= gamma / 5.0 - 1e-15));
        }
    }

    #[test]
    fn exploitability_is_nonnegative(m in arb_matrix(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = MixedStrategy::normalized((0..m.rows()).map(|_| rng.gen::<f64>() + 1e-3).collect()).unwrap();
        let d = MixedStrategy::normalized((0..m.cols()).map(|_| rng.gen::<f64>() + 1e-3).collect()).unwrap();
        prop_assert!(exploitability(&m, &a, &d).unwrap() >= 0.0);
        let v = expected_payoff(&m, &a, &d).unwrap();
        let r = solve_minimax(&m).unwrap();
        // any profile's payoff sits between the two guarantees around the value
        prop_assert!(pmugame::equilibrium::defender_best_response(&m, &a) <= r.value + 1e-9);
        prop_assert!(pmugame::equilibrium::attacker_best_response(&m, &d) >= r.value - 1e-9);
        prop_assert!(v.is_finite());
    }
}
