use proptest::prelude::*;

use texlab::linalg::ops::{kron, trace};
use texlab::linalg::{
    bloch_from_qubit, fidelity, haar_random_pure, partial_trace, random_density, random_density_with_rank, DensityMatrix,
    Qubit, Rng,
};

fn det2(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re
}

fn overlap(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    trace(&(rho.matrix() * sigma.matrix())).re
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fidelity_axioms(seed in any::<u64>(), dim in 2usize..6, rank_a in 1usize..6, rank_b in 1usize..6) {
        let mut rng = Rng::new(seed);
        let rho = random_density_with_rank(dim, rank_a.min(dim), &mut rng).unwrap();
        let sigma = random_density_with_rank(dim, rank_b.min(dim), &mut rng).unwrap();
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() <= 1e-9);
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() <= 1e-8);
        if rho.distance_frobenius(&sigma) > 1e-3 {
            prop_assert!(f < 1.0 - 1e-8);
        }
    }

    // Qubit oracle: F = tr(ρσ) + 2√(det ρ · det σ).
    #[test]
    fn qubit_fidelity_matches_determinant_formula(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let rho = random_density(2, &mut rng).unwrap();
        let sigma = random_density(2, &mut rng).unwrap();
        let oracle = overlap(&rho, &sigma) + 2.0 * (det2(&rho).max(0.0) * det2(&sigma).max(0.0)).sqrt();
        prop_assert!((fidelity(&rho, &sigma).unwrap() - oracle).abs() <= 1e-9);
    }

    #[test]
    fn partial_trace_keeps_trace_and_positivity(seed in any::<u64>(), rank in 1usize..=4) {
        let mut rng = Rng::new(seed);
        let rho = random_density_with_rank(4, rank, &mut rng).unwrap();
        for keep in [Qubit::Control, Qubit::Target] {
            let r = partial_trace(&rho, keep).unwrap();
            prop_assert!((trace(r.matrix()).re - 1.0).abs() <= 1e-12);
            let (values, _) = r.eigen();
            prop_assert!(values.iter().all(|&v| v >= -1e-10));
        }
    }

    #[test]
    fn partial_trace_of_product_returns_factors(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let a = random_density(2, &mut rng).unwrap();
        let b = random_density(2, &mut rng).unwrap();
        let ab = DensityMatrix::new(kron(a.matrix(), b.matrix())).unwrap();
        prop_assert!(partial_trace(&ab, Qubit::Control).unwrap().distance_max(&a) <= 1e-12);
        prop_assert!(partial_trace(&ab, Qubit::Target).unwrap().distance_max(&b) <= 1e-12);
    }

    #[test]
    fn bloch_length_flags_purity(seed in any::<u64>(), pure in any::<bool>()) {
        let mut rng = Rng::new(seed);
        let rho = random_density_with_rank(2, if pure { 1 } else { 2 }, &mut rng).unwrap();
        let n = bloch_from_qubit(&rho).unwrap().norm();
        prop_assert!(n <= 1.0 + 1e-12);
        // 2·purity − 1 = |n|²
        prop_assert!((n * n - (2.0 * rho.purity() - 1.0)).abs() <= 1e-10);
        prop_assert_eq!((n - 1.0).abs() <= 1e-10, pure);
    }

    #[test]
    fn equal_seeds_give_equal_streams(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = Rng::derive(seed, stream);
        let mut b = Rng::derive(seed, stream);
        for _ in 0..64 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
        let psi = haar_random_pure(5, &mut Rng::new(seed)).unwrap();
        prop_assert_eq!(psi, haar_random_pure(5, &mut Rng::new(seed)).unwrap());
    }
}

#[test]
fn haar_qubit_moments() {
    let mut rng = Rng::new(42);
    let n = 1_000_000;
    let (mut s_a, mut s_a2, mut s_ab, mut s_ab2) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let psi = haar_random_pure(2, &mut rng).unwrap();
        let a = psi.amplitudes()[0].norm_sqr();
        let ab = a * psi.amplitudes()[1].norm_sqr();
        s_a += a;
        s_a2 += a * a;
        s_ab += ab;
        s_ab2 += ab * ab;
    }
    let nf = n as f64;
    let (mean_a, mean_ab) = (s_a / nf, s_ab / nf);
    let se_a = ((s_a2 / nf - mean_a * mean_a) / nf).sqrt();
    let se_ab = ((s_ab2 / nf - mean_ab * mean_ab) / nf).sqrt();
    // |a|² is uniform on [0, 1]; |a|²|b|² = u(1 − u) has mean 1/6.
    assert!((mean_a - 0.5).abs() <= 3.0 * se_a, "{mean_a}");
    assert!((mean_ab - 1.0 / 6.0).abs() <= 3.0 * se_ab, "{mean_ab}");
}
