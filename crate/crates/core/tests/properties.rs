use proptest::prelude::*;
use qsearch_core::*;

fn circuit(n: usize, size: usize, kind: GateKind, seed: u64, angles: &[f64]) -> ParameterizedCircuit {
    let config = sample_config(n, size, kind, RngSeed::new(seed, 0)).unwrap();
    let count = config.param_count();
    let params = (0..count).map(|k| angles[k % angles.len()] * (1.0 + k as f64 * 0.37)).collect();
    ParameterizedCircuit::new(config, RotationParams::new(params).unwrap()).unwrap()
}

fn kind_strategy() -> impl Strategy<Value = GateKind> {
    prop_oneof![Just(GateKind::Cnot), Just(GateKind::B)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circuits_are_unitary(
        n in 2usize..5,
        size in 0usize..12,
        kind in kind_strategy(),
        seed in any::<u64>(),
        angles in prop::collection::vec(-10.0f64..10.0, 1..8),
    ) {
        let u = circuit(n, size, kind, seed, &angles).unitary();
        prop_assert!(u.unitarity_error() < 1e-12);
    }

    #[test]
    fn fidelity_is_a_probability(
        n in 2usize..4,
        size in 0usize..8,
        kind in kind_strategy(),
        seed in any::<u64>(),
        angles in prop::collection::vec(-10.0f64..10.0, 1..8),
    ) {
        let c = circuit(n, size, kind, seed, &angles);
        for target in [
            Target::StatePrep(haar_random_state(n, RngSeed::new(seed, 1)).unwrap()),
            Target::Unitary(haar_random_unitary(n, RngSeed::new(seed, 2)).unwrap()),
        ] {
            let f = fidelity(&c, &target).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        }
    }

    #[test]
    fn applying_a_circuit_preserves_norm(
        n in 2usize..6,
        size in 0usize..20,
        kind in kind_strategy(),
        seed in any::<u64>(),
        angles in prop::collection::vec(-10.0f64..10.0, 1..8),
    ) {
        let c = circuit(n, size, kind, seed, &angles);
        let psi = haar_random_state(n, RngSeed::new(seed, 3)).unwrap();
        let out = c.apply(&psi).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn placements_are_canonical(a in 0usize..8, b in 0usize..8) {
        match Placement::new(a, b) {
            Ok(p) => {
                prop_assert!(p.i() < p.j());
                prop_assert_eq!((p.i(), p.j()), (a.min(b), a.max(b)));
            }
            Err(_) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn lower_bounds_grow_with_n(n in 2usize..20) {
        for task in [TaskKind::StatePrep, TaskKind::UnitarySynthesis] {
            for kind in [GateKind::Cnot, GateKind::B] {
                prop_assert!(lower_bound(task, kind, n).unwrap() <= lower_bound(task, kind, n + 1).unwrap());
            }
        }
    }

    #[test]
    fn error_bars_bracket_the_estimate(n_samples in 1u64..300, frac in 0.0f64..=1.0) {
        let k = (frac * n_samples as f64).round() as u64;
        let post = bayes_posterior(k, n_samples, 2001).unwrap();
        let (lo, hi) = error_bars(&post);
        let p = k as f64 / n_samples as f64;
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p + 1e-9 && p - 1e-9 <= hi);
    }

    #[test]
    fn histogram_counts_everything(values in prop::collection::vec(0.0f64..=1.0, 0..200), bins in 1usize..150) {
        let h = fidelity_histogram(&values, bins).unwrap();
        prop_assert_eq!(h.total(), values.len() as u64);
        prop_assert_eq!(h.bins(), bins);
    }

    #[test]
    fn state_json_round_trips(n in 1usize..5, seed in any::<u64>()) {
        let psi = haar_random_state(n, RngSeed::new(seed, 0)).unwrap();
        let back = StateVector::from_json(&psi.to_json()).unwrap();
        prop_assert!(psi.max_abs_diff(&back) < 1e-15);
    }
}
