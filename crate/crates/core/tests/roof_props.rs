use proptest::prelude::*;

use texlab::linalg::ops::{identity, max_abs_diff};
use texlab::linalg::{random_density, random_density_with_rank, DensityMatrix, Rng};
use texlab::measures::{lower_bound_measure, qubit_coherence, FreeSet};
use texlab::roof::{
    convex_roof, eigen_ensemble, ensemble_value, hjw_decomposition, semi_unitary_from_vector, Ensemble,
    OptimizerConfig,
};

/// `Σ p_i (−ln max_{k<m} |φ_i[k]|²)`, straight from the amplitudes.
fn basis_subset_value(ensemble: &Ensemble, m: usize) -> f64 {
    ensemble
        .weights
        .iter()
        .zip(&ensemble.states)
        .map(|(p, phi)| {
            let best = (0..m).map(|k| phi.amplitudes()[k].norm_sqr()).fold(0.0, f64::max);
            -p * best.ln()
        })
        .sum()
}

fn small_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig { max_iterations: 150, population_size: 20, ..OptimizerConfig::default() }.with_seed(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn semi_unitary_columns_are_orthonormal(x in prop::collection::vec(-1.0f64..1.0, 2 * 16 * 4)) {
        let u = semi_unitary_from_vector(&x, 16, 4).unwrap();
        prop_assert!(max_abs_diff(&(u.adjoint() * &u), &identity(4)) <= 1e-10);
    }

    #[test]
    fn any_mixing_reconstructs(seed in any::<u64>(), rank in 1usize..=4, extra in 0usize..=12) {
        let mut rng = Rng::new(seed);
        let rho = random_density_with_rank(4, rank, &mut rng).unwrap();
        let k = rank + extra;
        let x: Vec<f64> = (0..2 * k * rank).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let u = semi_unitary_from_vector(&x, k, rank).unwrap();
        let ens = hjw_decomposition(&rho, &u).unwrap();
        prop_assert!(ens.len() <= k);
        prop_assert!((ens.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!(ens.reconstruction_error() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn roof_result_survives_audit(seed in any::<u64>(), m in 1usize..=3) {
        let mut rng = Rng::new(seed);
        let free = FreeSet::basis_subset(3, m).unwrap();
        let rho = random_density(3, &mut rng).unwrap();
        let res = convex_roof(&free, &rho, 9, &small_config(seed), &mut rng).unwrap();
        let ens = &res.best_ensemble;
        prop_assert!(ens.source.distance_max(&rho) == 0.0);
        prop_assert!(ens.reconstruction_error() <= 1e-9);
        prop_assert!((ensemble_value(&free, ens).unwrap() - res.value.value).abs() <= 1e-10);
        prop_assert!((basis_subset_value(ens, m) - res.value.value).abs() <= 1e-10);
        prop_assert!(res.history.windows(2).all(|w| w[1] <= w[0]));

        // Sandwich.
        let eigen = ensemble_value(&free, &eigen_ensemble(&rho)).unwrap();
        prop_assert!(res.value.value <= eigen + 1e-9);
        let lb = lower_bound_measure(&free, &rho, &OptimizerConfig::lower_bound(), &mut rng).unwrap();
        prop_assert!(lb.value - 1e-6 <= res.value.value);
    }

    #[test]
    fn roof_is_convex_on_qubits(seed in any::<u64>(), t in 0.05f64..0.95) {
        let mut rng = Rng::new(seed);
        let free = FreeSet::incoherent(2).unwrap();
        let (a, b) = (random_density(2, &mut rng).unwrap(), random_density(2, &mut rng).unwrap());
        let mix = DensityMatrix::new(a.matrix().scale(t) + b.matrix().scale(1.0 - t)).unwrap();
        let config = OptimizerConfig::default().with_seed(seed);
        let roof = |rho: &DensityMatrix, rng: &mut Rng| convex_roof(&free, rho, 4, &config, rng).unwrap().value.value;
        let (ra, rb, rm) = (roof(&a, &mut rng), roof(&b, &mut rng), roof(&mix, &mut rng));
        prop_assert!(rm <= t * ra + (1.0 - t) * rb + 5e-3);
        // The closed form is an independent check on each of the three roofs.
        for (rho, v) in [(&a, ra), (&b, rb), (&mix, rm)] {
            prop_assert!((qubit_coherence(rho).unwrap().value - v).abs() <= 2e-3);
        }
    }

    #[test]
    fn roof_is_convex_in_three_dimensions(seed in any::<u64>(), t in 0.05f64..0.95) {
        let mut rng = Rng::new(seed);
        let free = FreeSet::basis_subset(3, 2).unwrap();
        let (a, b) = (random_density(3, &mut rng).unwrap(), random_density(3, &mut rng).unwrap());
        let mix = DensityMatrix::new(a.matrix().scale(t) + b.matrix().scale(1.0 - t)).unwrap();
        let config = OptimizerConfig::default().with_seed(seed);
        let roof = |rho: &DensityMatrix, rng: &mut Rng| convex_roof(&free, rho, 9, &config, rng).unwrap().value.value;
        let (ra, rb, rm) = (roof(&a, &mut rng), roof(&b, &mut rng), roof(&mix, &mut rng));
        prop_assert!(rm <= t * ra + (1.0 - t) * rb + 5e-3, "{rm} vs {ra}, {rb} at t = {t}");
    }
}
