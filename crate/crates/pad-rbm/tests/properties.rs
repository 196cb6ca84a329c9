//! Randomized invariants: serialization round-trips, energy identities,
//! and structural guarantees that must hold for arbitrary inputs.

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use pad_rbm::data::{load_model, load_text_dataset, save_model, save_text_dataset};
use pad_rbm::matching::max_weight_matching;
use pad_rbm::model::{
    energy, log_partition_exact, log_sum_exp, softplus, BinaryState, Dataset, ModelParams,
};

fn small_model() -> impl Strategy<Value = ModelParams> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(n, m)| {
        (
            proptest::collection::vec(-5.0f64..5.0, n * m),
            proptest::collection::vec(-5.0f64..5.0, n),
            proptest::collection::vec(-5.0f64..5.0, m),
        )
            .prop_map(move |(w, a, b)| ModelParams {
                w: Array2::from_shape_vec((n, m), w).unwrap(),
                a: Array1::from_vec(a),
                b: Array1::from_vec(b),
            })
    })
}

fn bit_rows() -> impl Strategy<Value = (usize, Vec<Vec<u8>>)> {
    (1usize..=6).prop_flat_map(|n| {
        proptest::collection::vec(proptest::collection::vec(0u8..=1, n), 1..=8)
            .prop_map(move |rows| (n, rows))
    })
}

proptest! {
    #[test]
    fn model_save_load_round_trips_exactly(p in small_model()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&p, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        prop_assert_eq!(p, loaded);
    }

    #[test]
    fn dataset_save_load_round_trips_exactly((n, rows) in bit_rows()) {
        let d = Dataset::new(n, rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.txt");
        save_text_dataset(&d, &path).unwrap();
        let loaded = load_text_dataset(&path).unwrap();
        prop_assert_eq!(d.n, loaded.n);
        prop_assert_eq!(d.examples, loaded.examples);
    }

    // Shifting every bias by a constant shifts every state's energy by a
    // computable amount: E'(v,h) = E(v,h) - c(|v| + |h|).
    #[test]
    fn energy_responds_linearly_to_bias_shift(p in small_model(), c in -2.0f64..2.0) {
        let mut shifted = p.clone();
        shifted.a += c;
        shifted.b += c;
        let (n, m) = (p.n_visible(), p.n_hidden());
        for idx in 0..1usize << (n + m) {
            let v: Vec<u8> = (0..n).map(|i| ((idx >> i) & 1) as u8).collect();
            let h: Vec<u8> = (0..m).map(|j| ((idx >> (n + j)) & 1) as u8).collect();
            let ones = v.iter().chain(h.iter()).filter(|&&b| b == 1).count() as f64;
            let s = BinaryState::new(v, h).unwrap();
            let expected = energy(&s, &p).unwrap() - c * ones;
            prop_assert!((energy(&s, &shifted).unwrap() - expected).abs() < 1e-9);
        }
    }

    // log Z is at least the log weight of any single state.
    #[test]
    fn log_partition_dominates_every_state(p in small_model()) {
        let log_z = log_partition_exact(&p).unwrap();
        let (n, m) = (p.n_visible(), p.n_hidden());
        for idx in 0..1usize << (n + m) {
            let v: Vec<u8> = (0..n).map(|i| ((idx >> i) & 1) as u8).collect();
            let h: Vec<u8> = (0..m).map(|j| ((idx >> (n + j)) & 1) as u8).collect();
            let s = BinaryState::new(v, h).unwrap();
            prop_assert!(log_z >= -energy(&s, &p).unwrap() - 1e-9);
        }
    }

    #[test]
    fn log_sum_exp_shift_invariant(xs in proptest::collection::vec(-50.0f64..50.0, 1..10),
                                   shift in -100.0f64..100.0) {
        let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let lhs = log_sum_exp(&shifted);
        let rhs = log_sum_exp(&xs) + shift;
        prop_assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn softplus_is_exact_log1p_exp(x in -700.0f64..700.0) {
        let direct = if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
        prop_assert!((softplus(x) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        prop_assert!(softplus(x) >= x.max(0.0));
    }

    // Matchings returned on nonnegative matrices never reuse a row or
    // column and never exceed the smaller dimension.
    #[test]
    fn matching_is_a_partial_permutation(
        (n, m, entries) in (1usize..=6, 1usize..=6)
            .prop_flat_map(|(n, m)| {
                proptest::collection::vec(0.0f64..10.0, n * m)
                    .prop_map(move |e| (n, m, e))
            })
    ) {
        let w = Array2::from_shape_vec((n, m), entries).unwrap();
        let mt = max_weight_matching(&w).unwrap();
        prop_assert!(mt.len() <= n.min(m));
        let mut rows = vec![false; n];
        let mut cols = vec![false; m];
        for &(i, j) in &mt.pairs {
            prop_assert!(!rows[i] && !cols[j], "duplicate row or column");
            rows[i] = true;
            cols[j] = true;
        }
    }
}
