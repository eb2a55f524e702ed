mod common;

use molfuse_core::bench::{self, SeparationMode};
use molfuse_core::iva::{self, IvaOptions};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn two_dataset_correlated_sources_separate_well() {
    // K=2, P=2, strongly dependent SCVs mixed by condition-bounded matrices.
    let problem = bench::make_problem(2, 2, 4000, 0.7, 10.0, 321).unwrap();
    let result =
        bench::recovery_experiment(&problem, &IvaOptions::default(), SeparationMode::Iva).unwrap();
    assert!(result.jisi <= 0.05, "jISI = {}", result.jisi);
}

#[test]
fn joint_isi_invariant_under_permutation_and_row_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..20 {
        let p = rng.gen_range(2..6);
        let k = rng.gen_range(1..4);
        let w: Vec<Array2<f64>> = (0..k)
            .map(|i| common::seeded_matrix(p, p, -2.0, 2.0, 1000 + trial * 10 + i as u64))
            .collect();
        let a: Vec<Array2<f64>> = (0..k)
            .map(|i| common::seeded_matrix(p, p, -2.0, 2.0, 2000 + trial * 10 + i as u64))
            .collect();
        let base = iva::joint_isi(&w, &a);

        // Common row permutation + positive per-row scaling across slices.
        let mut perm: Vec<usize> = (0..p).collect();
        perm.shuffle(&mut rng);
        let scales: Vec<f64> = (0..p).map(|_| rng.gen_range(0.05..20.0)).collect();
        let transformed: Vec<Array2<f64>> = w
            .iter()
            .map(|wk| {
                let mut out = Array2::<f64>::zeros((p, p));
                for (dst, &src) in perm.iter().enumerate() {
                    for c in 0..p {
                        out[[dst, c]] = scales[dst] * wk[[src, c]];
                    }
                }
                out
            })
            .collect();
        let scored = iva::joint_isi(&transformed, &a);
        assert!(
            (scored - base).abs() <= 1e-12,
            "trial {trial}: {base} vs {scored}"
        );
    }
}

#[test]
fn cost_trace_non_increasing_on_synthetic_problems() {
    for trial in 0..5u64 {
        let problem = bench::make_problem(3, 4, 1500, 0.5, 10.0, 50 + trial).unwrap();
        let result =
            bench::recovery_experiment(&problem, &IvaOptions::default(), SeparationMode::Iva)
                .unwrap();
        for pair in result.demixing.cost_trace.windows(2) {
            assert!(pair[1] <= pair[0], "trace increased on trial {trial}");
        }
    }
}

#[test]
fn dependence_makes_iva_beat_ica() {
    // Directional claim over a handful of seeds at strong dependence.
    let opts = IvaOptions::default();
    let mut iva_mean = 0.0;
    let mut ica_mean = 0.0;
    let trials = 8u64;
    for trial in 0..trials {
        let seed = bench::trial_seed(9, trial);
        let problem = bench::make_problem(3, 4, 3000, 0.7, 10.0, seed).unwrap();
        iva_mean += bench::recovery_experiment(&problem, &opts, SeparationMode::Iva)
            .unwrap()
            .jisi;
        ica_mean += bench::recovery_experiment(&problem, &opts, SeparationMode::Ica)
            .unwrap()
            .jisi;
    }
    iva_mean /= trials as f64;
    ica_mean /= trials as f64;
    assert!(
        iva_mean < ica_mean,
        "iva {iva_mean} should beat ica {ica_mean} under dependence"
    );
}

#[test]
fn whitening_then_oracle_demixing_reaches_near_zero_jisi() {
    let problem = bench::make_problem(2, 3, 3000, 0.5, 8.0, 1234).unwrap();
    // Pre-whitened trivial case: identity mixing on whitened slices.
    let result =
        bench::recovery_experiment(&problem, &IvaOptions::default(), SeparationMode::Iva).unwrap();
    // The effective mixing from the experiment must itself be separable by
    // its inverse to numerical zero.
    let oracle: Vec<Array2<f64>> = result
        .effective_mixing
        .iter()
        .map(common::gauss_jordan_inverse)
        .collect();
    let jisi = iva::joint_isi(&oracle, &result.effective_mixing);
    assert!(jisi < 1e-10, "oracle separator scored {jisi}");
}
