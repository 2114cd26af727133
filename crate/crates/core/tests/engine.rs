use condensa_core::ensemble::histogram_frequencies;
use condensa_core::trajectory::{run, CheckLevel};
use condensa_core::{GraphState, Mode, OracleDistribution, SimulationConfig, WeightExponent};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gammas() -> impl Strategy<Value = WeightExponent> {
    prop_oneof![
        Just("1/2"),
        Just("1"),
        Just("9/8"),
        Just("5/4"),
        Just("3/2"),
        Just("2"),
        Just("3"),
        Just("8"),
    ]
    .prop_map(|s| s.parse().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn incremental_weight_matches_recomputation(gamma in gammas(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = GraphState::new(gamma, Mode::Histogram);
        for _ in 0..10_000 {
            state.attach_step(&mut rng).unwrap();
        }
        let (s, v) = state.recompute_aggregates();
        prop_assert!((s - state.total_weight()).abs() <= 1e-9 * s);
        prop_assert_eq!(v, state.max_degree());
        prop_assert!(state.check_invariants().is_ok());
    }

    #[test]
    fn modes_agree(gamma in gammas(), seed in any::<u64>()) {
        let mut c = SimulationConfig::new(gamma, 3000, seed);
        c.checks = CheckLevel::Checkpoints;
        let h = run(&c).unwrap();
        c.mode = Mode::Tracked;
        let t = run(&c).unwrap();
        for (a, b) in h.checkpoints.iter().zip(&t.checkpoints) {
            prop_assert_eq!(&a.z, &b.z);
            prop_assert_eq!(&a.tail, &b.tail);
            prop_assert_eq!(a.v, b.v);
        }
    }

    #[test]
    fn counts_evolve_monotonically(gamma in gammas(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = GraphState::new(gamma, Mode::Tracked);
        let mut phi: Vec<u64> = (1..=12).map(|k| state.tail_count(k)).collect();
        for _ in 0..2000 {
            let v = state.max_degree();
            let chosen = state.attach_step(&mut rng).unwrap();
            prop_assert!(chosen >= 1 && chosen <= v);
            prop_assert!(state.max_degree() == v || state.max_degree() == v + 1);
            let now: Vec<u64> = (1..=12).map(|k| state.tail_count(k)).collect();
            prop_assert!(now.iter().zip(&phi).all(|(a, b)| a >= b));
            phi = now;
        }
        prop_assert!(state.check_tracking().is_ok());
    }
}

#[test]
fn weight_bounds_hold_along_a_long_run() {
    let mut c = SimulationConfig::new("5/4".parse().unwrap(), 1_000_000, 11);
    c.checks = CheckLevel::Checkpoints;
    let t = run(&c).unwrap();
    let last = t.last();
    let n = last.n as f64;
    assert!(last.s <= 2.0 * n.powf(1.25));
    assert!(last.s <= n * ((last.v as f64).powf(0.25) + 2.5));
}

/// Small-n law against exhaustive enumeration, 4 standard errors per
/// outcome. The full-size version lives in the acceptance suite.
#[test]
fn small_n_law_matches_enumeration() {
    let reps = 100_000u64;
    for g in ["5/4", "3"] {
        let gamma: WeightExponent = g.parse().unwrap();
        let oracle = OracleDistribution::new(gamma, 6).unwrap();
        let freq = histogram_frequencies(gamma, 6, 0..reps, 2024, Mode::Histogram).unwrap();
        for h in freq.keys() {
            assert!(oracle.outcomes.contains_key(h), "impossible outcome {h:?}");
        }
        for (h, &p) in &oracle.outcomes {
            let f = *freq.get(h).unwrap_or(&0) as f64 / reps as f64;
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((f - p).abs() <= 4.0 * se, "γ={g} {h:?}: {f} vs {p}");
        }
    }
}
