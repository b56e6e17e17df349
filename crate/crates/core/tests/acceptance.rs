//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use texlab::channels::{apply, random_fixed_point_channel, KrausChannel};
use texlab::experiments::{max_mode_increase, random_walk_experiment, strong_monotonicity_check};
use texlab::gateid::{closed_form_averages, failure_family, monte_carlo_protocol, CnotBasis, LayerSpec};
use texlab::linalg::ops::hadamard;
use texlab::linalg::{haar_random_pure, haar_unitary, random_density, DensityMatrix, PureState, Rng};
use texlab::measures::{lower_bound_measure, qubit_coherence, qubit_imaginarity, FreeSet};
use texlab::roof::{convex_roof, ensemble_value, eigen_ensemble, OptimizerConfig};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn single_qubit_baseline() -> Check {
    let mut rng = Rng::new(101);
    let mut worst: f64 = 0.0;
    for pair in 0..20 {
        let psi = haar_random_pure(2, &mut rng).map_err(|e| e.to_string())?;
        let layer = LayerSpec::single(haar_unitary(2, &mut rng).unwrap()).unwrap();
        let est = monte_carlo_protocol(&layer, &psi, 200_000, &mut rng).map_err(|e| e.to_string())?;
        for (v, se) in est.values().iter().zip(est.std_err) {
            let z = (v - 1.0).abs() / se;
            worst = worst.max(z);
            ensure(z <= 3.0, || format!("pair {pair}: {v} is {z:.2} standard errors from 1"))?;
        }
    }
    Ok(format!("20 pairs, largest deviation {worst:.2} standard errors"))
}

fn cnot_closed_form_match() -> Check {
    let mut rng = Rng::new(202);
    let mut worst: f64 = 0.0;
    for pair in 0..50 {
        let basis = CnotBasis::random(&mut rng);
        let psi = haar_random_pure(2, &mut rng).unwrap();
        let exact = closed_form_averages(&psi, &basis).unwrap();
        let est = monte_carlo_protocol(&LayerSpec::Cnot(basis), &psi, 200_000, &mut rng).unwrap();
        for q in 0..4 {
            let z = (est.values()[q] - exact.values()[q]).abs() / est.std_err[q];
            worst = worst.max(z);
            ensure(z <= 3.0, || format!("pair {pair}, score {q}: {z:.2} standard errors from the closed form"))?;
        }
    }
    Ok(format!("50 pairs, largest deviation {worst:.2} standard errors"))
}

fn failure_circle() -> Check {
    let mut rng = Rng::new(303);
    let h = hadamard();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let fam = failure_family(rng.uniform_in(0.0, TAU), rng.uniform_in(0.0, TAU)).unwrap();
        for psi in [&fam.psi_plus, &fam.psi_minus] {
            let est = closed_form_averages(psi, &fam.basis).unwrap();
            for v in est.values() {
                worst = worst.max((v - 1.0).abs());
            }
        }
        let phase_gap = 1.0 - fam.psi_minus.evolve(&h).unwrap().inner(&fam.psi_plus).unwrap().norm();
        worst = worst.max(phase_gap.abs());
    }
    ensure(worst <= 1e-10, || format!("deviation {worst:.3e}"))?;
    Ok(format!("20 family members, largest deviation {worst:.1e}"))
}

fn strong_monotonicity_violations() -> Check {
    let cases = [(2, 0.75, 1.0607), (3, 5.0 / 6.0, 1.10), (10, 0.95, 1.08)];
    let mut parts = vec![];
    for (d, a, quoted) in cases {
        let r = strong_monotonicity_check(d, a).map_err(|e| e.to_string())?;
        let exponent = d as f64 * (1.0 - a) / (d as f64 - 1.0);
        let closed = a * (d as f64).powf(exponent);
        ensure((r.violation_metric - closed).abs() <= 5e-3, || format!("D={d}: metric {}", r.violation_metric))?;
        ensure((r.violation_metric - quoted).abs() <= 5e-3, || format!("D={d}: metric {} vs quoted {quoted}", r.violation_metric))?;
        // Channel route: exp(Σ p_j R(σ_j) − R(τ)) against the closed form.
        let route = (r.rhs - r.lhs).exp();
        ensure((route - closed).abs() <= 1e-9, || format!("D={d}: routes differ by {:.3e}", route - closed))?;
        ensure(r.violated, || format!("D={d}: not flagged"))?;
        parts.push(format!("D={d}: {:.4}", r.violation_metric));
    }
    Ok(parts.join(", "))
}

fn free_mixture(m: usize, rng: &mut Rng) -> DensityMatrix {
    let w: Vec<f64> = (0..m).map(|_| rng.uniform() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|x| x / total).collect();
    let states: Vec<PureState> = (0..m).map(|i| PureState::basis(4, i).unwrap()).collect();
    DensityMatrix::mixture(&w, &states).unwrap()
}

fn channel_invariants(ch: &KrausChannel, m: usize, rng: &mut Rng) -> Result<(), String> {
    let err = ch.completeness_error();
    ensure(err <= 1e-9, || format!("completeness error {err:.3e}"))?;
    for i in 0..m {
        let ket = PureState::basis(4, i).unwrap().density();
        let drift = apply(ch, &ket).unwrap().distance_max(&ket);
        ensure(drift <= 1e-9, || format!("free state {i} moved by {drift:.3e}"))?;
    }
    let sigma = free_mixture(m, rng);
    let drift = apply(ch, &sigma).unwrap().distance_max(&sigma);
    ensure(drift <= 1e-9, || format!("free mixture moved by {drift:.3e}"))?;
    for k in ch.operators() {
        for col in 0..m {
            for row in 0..4 {
                ensure(row == col || k[(row, col)].norm() == 0.0, || format!("entry ({row},{col}) breaks the block form"))?;
            }
        }
    }
    Ok(())
}

fn fixed_point_channels() -> Check {
    let mut rng = Rng::new(505);
    for n in 0..1000 {
        let m = 1 + n % 3;
        let ch = random_fixed_point_channel(4, m, 3, &mut rng).map_err(|e| format!("channel {n}: {e}"))?;
        channel_invariants(&ch, m, &mut rng).map_err(|e| format!("channel {n} (m={m}): {e}"))?;
    }
    Ok("1000 channels".into())
}

fn roof_closed_forms() -> Check {
    let mut rng = Rng::new(606);
    let config = OptimizerConfig::default();
    let real = FreeSet::real_states(2).unwrap();
    let incoherent = FreeSet::incoherent(2).unwrap();
    let (mut worst_i, mut worst_c): (f64, f64) = (0.0, 0.0);
    for n in 0..100 {
        let rho = random_density(2, &mut rng).unwrap();
        let im = convex_roof(&real, &rho, 4, &config, &mut rng).unwrap().value.value;
        let co = convex_roof(&incoherent, &rho, 4, &config, &mut rng).unwrap().value.value;
        let di = (im - qubit_imaginarity(&rho).unwrap().value).abs();
        let dc = (co - qubit_coherence(&rho).unwrap().value).abs();
        worst_i = worst_i.max(di);
        worst_c = worst_c.max(dc);
        ensure(di <= 2e-3 && dc <= 2e-3, || format!("state {n}: imaginarity off by {di:.2e}, coherence by {dc:.2e}"))?;
    }
    Ok(format!("100 qubits, largest error imaginarity {worst_i:.1e}, coherence {worst_c:.1e}"))
}

fn walk_monotonicity() -> Check {
    let config = OptimizerConfig::default();
    let mut parts = vec![];
    for m in 1..=3 {
        // Three independent channel sequences per free dimension.
        for seq in 0..3u64 {
            let mut rng = Rng::new(700 + 10 * m as u64 + seq);
            let walk = random_walk_experiment(4, m, 3, 4, 30, 16, &config, &mut rng).map_err(|e| e.to_string())?;
            ensure(walk.len() == 5, || "expected five records".into())?;
            ensure(walk[0].mode.is_infinite(), || format!("m={m}: |4⟩ should have infinite measure"))?;
            for r in &walk {
                ensure(r.quantile_low <= r.mode && r.mode <= r.quantile_high, || format!("m={m}: mode outside quantiles"))?;
            }
            let rise = max_mode_increase(&walk);
            ensure(rise <= 5e-2, || format!("m={m}, sequence {seq}: mode rose by {rise:.3e}"))?;
            parts.push(format!("{rise:.3}"));
        }
    }
    Ok(format!("9 walks, largest mode change per walk: {}", parts.join(" ")))
}

fn sandwich_and_faithfulness() -> Check {
    let mut rng = Rng::new(808);
    let config = OptimizerConfig::default();
    let lb_config = OptimizerConfig::lower_bound();
    let sets = [
        FreeSet::basis_subset(4, 1).unwrap(),
        FreeSet::basis_subset(4, 2).unwrap(),
        FreeSet::basis_subset(4, 3).unwrap(),
        FreeSet::incoherent(4).unwrap(),
    ];
    let mut tightest: f64 = f64::INFINITY;
    for n in 0..100 {
        let free = &sets[n % sets.len()];
        let rho = random_density(4, &mut rng).unwrap();
        let lb = lower_bound_measure(free, &rho, &lb_config, &mut rng).unwrap().value;
        let roof = convex_roof(free, &rho, 16, &config, &mut rng).unwrap().value.value;
        let eigen = ensemble_value(free, &eigen_ensemble(&rho)).unwrap();
        ensure(lb - 1e-6 <= roof, || format!("state {n}: lower bound {lb} above roof {roof}"))?;
        ensure(roof <= eigen + 1e-9, || format!("state {n}: roof {roof} above eigen-ensemble {eigen}"))?;
        ensure(lb >= -1e-10, || format!("state {n}: negative lower bound {lb}"))?;
        tightest = tightest.min(roof - lb);
    }

    // Faithfulness: zero on members, positive off the set.
    for n in 0..100 {
        let m = 1 + n % 3;
        let free = FreeSet::basis_subset(4, m).unwrap();
        let member = free_mixture(m, &mut rng);
        ensure(free.contains(&member, 1e-12).unwrap(), || format!("member {n} not recognized"))?;
        let lb = lower_bound_measure(&free, &member, &lb_config, &mut rng).unwrap().value;
        let roof = convex_roof(&free, &member, 16, &config, &mut rng).unwrap().value.value;
        ensure(lb.abs() <= 1e-8 && roof.abs() <= 1e-8, || format!("member {n}: lower bound {lb}, roof {roof}"))?;

        let outsider = random_density(4, &mut rng).unwrap();
        ensure(!free.contains(&outsider, 1e-8).unwrap(), || format!("outsider {n} counted as free"))?;
        let lb = lower_bound_measure(&free, &outsider, &lb_config, &mut rng).unwrap().value;
        ensure(lb > 1e-8, || format!("outsider {n}: lower bound {lb}"))?;
    }
    Ok(format!("100 sandwiches (smallest roof − bound gap {tightest:.2e}), 100 members and 100 outsiders"))
}

fn haar_moments() -> Check {
    let mut rng = Rng::new(909);
    let n = 1_000_000;
    let (mut s, mut s2) = ([0.0; 3], [0.0; 3]);
    for _ in 0..n {
        let psi = haar_random_pure(2, &mut rng).unwrap();
        let (a2, b2) = (psi.amplitudes()[0].norm_sqr(), psi.amplitudes()[1].norm_sqr());
        for (i, x) in [a2, b2, a2 * b2].into_iter().enumerate() {
            s[i] += x;
            s2[i] += x * x;
        }
    }
    let nf = n as f64;
    let mut parts = vec![];
    for (i, target) in [0.5, 0.5, 1.0 / 6.0].into_iter().enumerate() {
        let mean = s[i] / nf;
        let se = ((s2[i] / nf - mean * mean) * nf / (nf - 1.0) / nf).sqrt();
        let z = (mean - target).abs() / se;
        ensure(z <= 3.0, || format!("moment {i}: {mean} is {z:.2} standard errors from {target}"))?;
        parts.push(format!("{mean:.5}"));
    }
    Ok(format!("E|a|² = {}, E|b|² = {}, E|a|²|b|² = {}", parts[0], parts[1], parts[2]))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("1 single-qubit baseline", single_qubit_baseline, Duration::from_secs(30)),
        ("2 CNOT closed-form match", cnot_closed_form_match, Duration::from_secs(300)),
        ("3 failure circle", failure_circle, Duration::MAX),
        ("4 strong-monotonicity violations", strong_monotonicity_violations, Duration::from_secs(1)),
        ("5 random fixed-point channels", fixed_point_channels, Duration::from_secs(30)),
        ("6 convex roof vs closed forms", roof_closed_forms, Duration::from_secs(600)),
        ("7 random-walk monotone decay", walk_monotonicity, Duration::from_secs(7200)),
        ("8 sandwich and faithfulness", sandwich_and_faithfulness, Duration::MAX),
        ("9 Haar moments", haar_moments, Duration::MAX),
    ];
    let mut failed = vec![];
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.1?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({elapsed:.1?})"),
            Err(why) => {
                println!("FAIL {name}: {why} ({elapsed:.1?})");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
