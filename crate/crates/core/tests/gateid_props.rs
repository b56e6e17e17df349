use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use texlab::gateid::{
    closed_form_averages, cnot_in_basis, detect_cnot, failure_family, failure_set_distance, monte_carlo_protocol,
    reconstruct_basis_candidates, CnotBasis, LayerSpec, Verdict,
};
use texlab::linalg::ops::{hadamard, kron, max_abs_diff, outer, unitarity_error};
use texlab::linalg::{haar_random_pure, haar_unitary, PureState, Rng};

/// `|c⟩⟨c| ⊗ I + |c′⟩⟨c′| ⊗ (|c⟩⟨c′| + |c′⟩⟨c|)`
fn cnot_oracle(basis: &CnotBasis) -> texlab::linalg::CMatrix {
    let (c, cp) = (basis.c().amplitudes(), basis.c_prime().amplitudes());
    let flip = outer(c, cp) + outer(cp, c);
    kron(&outer(c, c), &(outer(c, c) + outer(cp, cp))) + kron(&outer(cp, cp), &flip)
}

fn max_deviation(psi: &PureState, basis: &CnotBasis) -> f64 {
    closed_form_averages(psi, basis).unwrap().values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
}

/// Random bases, plus bases near the failure family where blind spots live.
fn any_basis() -> impl Strategy<Value = CnotBasis> {
    prop_oneof![
        any::<u64>().prop_map(|s| CnotBasis::random(&mut Rng::new(s))),
        (0.0..TAU, 0.0..TAU).prop_map(|(mu, nu2)| failure_family(mu, nu2).unwrap().basis),
        // Tilt n_c towards n_Y, keeping it normal to n_X.
        (0.0..TAU, 0.0..TAU, -0.05..0.05f64).prop_map(|(mu, nu2, eps)| {
            let [n_c, n_x, n_y] = failure_family(mu, nu2).unwrap().basis.axes();
            let tilted = [0, 1, 2].map(|i| eps.cos() * n_c[i] + eps.sin() * n_y[i]);
            CnotBasis::from_axes(tilted, n_x).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn cnot_matches_projector_form(seed in any::<u64>()) {
        let basis = CnotBasis::random(&mut Rng::new(seed));
        let u = cnot_in_basis(&basis);
        prop_assert!(unitarity_error(&u) <= 1e-12);
        prop_assert!(max_abs_diff(&u, &cnot_oracle(&basis)) <= 1e-12);
    }

    #[test]
    fn far_from_failure_set_is_detectable(basis in any_basis(), seed in any::<u64>()) {
        let psi = haar_random_pure(2, &mut Rng::new(seed)).unwrap();
        prop_assume!(failure_set_distance(&psi).unwrap() > 0.1);
        prop_assert!(max_deviation(&psi, &basis) > 1e-3);
    }

    #[test]
    fn failure_family_is_blind(mu in 0.0..TAU, nu2 in 0.0..TAU) {
        let fam = failure_family(mu, nu2).unwrap();
        let h = hadamard();
        // H maps Uψ₋ to Uψ₊ up to a global phase.
        let image = fam.psi_minus.evolve(&h).unwrap();
        prop_assert!((image.overlap(&fam.psi_plus).unwrap() - 1.0).abs() <= 1e-12);
        for psi in [&fam.psi_plus, &fam.psi_minus] {
            prop_assert!(failure_set_distance(psi).unwrap() <= 1e-7);
            prop_assert!(max_deviation(psi, &fam.basis) <= 1e-12);
        }
    }

    #[test]
    fn scores_stay_in_range(basis in any_basis(), seed in any::<u64>()) {
        // Σ̄ = 1 + (Bloch dot product)/3 lies in [2/3, 4/3].
        let psi = haar_random_pure(2, &mut Rng::new(seed)).unwrap();
        for v in closed_form_averages(&psi, &basis).unwrap().values() {
            prop_assert!((2.0 / 3.0 - 1e-12..=4.0 / 3.0 + 1e-12).contains(&v));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn verdict_follows_threshold(seed in any::<u64>(), cnot in any::<bool>(), threshold in 0.5f64..8.0) {
        let mut rng = Rng::new(seed);
        let psi = haar_random_pure(2, &mut rng).unwrap();
        let layer = if cnot {
            LayerSpec::Cnot(CnotBasis::random(&mut rng))
        } else {
            LayerSpec::single(haar_unitary(2, &mut rng).unwrap()).unwrap()
        };
        let est = monte_carlo_protocol(&layer, &psi, 2000, &mut rng).unwrap();
        prop_assert_eq!(est.n_samples, Some(2000));
        prop_assert!(est.std_err.iter().all(|&s| s >= 0.0));
        let report = detect_cnot(&est, threshold).unwrap();
        let biggest = report.z_scores.iter().map(|z| z.abs()).fold(0.0, f64::max);
        prop_assert_eq!(report.verdict == Verdict::CnotDetected, biggest > threshold);
        if report.verdict == Verdict::SingleQubitConsistent {
            prop_assert!(report.basis_candidates.is_empty());
        }
    }

    #[test]
    fn exact_scores_recover_the_basis(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let basis = CnotBasis::random(&mut rng);
        let psi = haar_random_pure(2, &mut rng).unwrap();
        prop_assume!(failure_set_distance(&psi).unwrap() > 0.1);
        let est = closed_form_averages(&psi, &basis).unwrap();
        let candidates = reconstruct_basis_candidates(&est, &psi).unwrap();
        prop_assert!(!candidates.is_empty() && candidates.len() <= 4);
        let best = candidates.iter().map(|b| b.axis_distance(&basis)).fold(PI, f64::min);
        prop_assert!(best <= 1e-3, "closest candidate is {best} rad away");
        // Every candidate explains the scores.
        for cand in &candidates {
            let again = closed_form_averages(&psi, cand).unwrap().values();
            for (a, b) in again.iter().zip(est.values()) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn monte_carlo_does_not_depend_on_thread_count() {
    let psi = haar_random_pure(2, &mut Rng::new(1)).unwrap();
    let layer = LayerSpec::Cnot(CnotBasis::random(&mut Rng::new(2)));
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| monte_carlo_protocol(&layer, &psi, 50_000, &mut Rng::new(3)).unwrap())
    };
    let one = run(1);
    for threads in [2, 3, 8] {
        assert_eq!(run(threads), one);
    }
}
