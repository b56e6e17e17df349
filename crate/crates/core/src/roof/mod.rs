//! Convex-roof extension of pure-state rugosity.
//!
//! A decomposition of `ρ` with `k` members is parameterized by a `k×r`
//! semi-unitary (`r = rank ρ`), itself encoded as `2kr` reals in `[-1, 1]`.
//! Differential evolution searches that box for the ensemble minimizing the
//! average pure-state measure.

pub mod de;
pub mod hjw;
pub mod nelder_mead;

use rayon::prelude::*;
use serde::Serialize;

pub use de::{differential_evolution, differential_evolution_seeded, DeOutcome, OptimizerConfig};
pub use hjw::{
    eigen_ensemble, hjw_decomposition, identity_encoding, semi_unitary_from_vector, Ensemble, EnsembleRow,
    EnsembleTable, Spectrum,
};

use crate::error::{Error, Result};
use crate::linalg::state::check_dims;
use crate::linalg::{CMatrix, DensityMatrix, PureState, Rng};
use crate::measures::{max_free_overlap, pure_rugosity, FreeSet, Method, MeasureValue, ZERO_OVERLAP};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoofResult {
    pub value: MeasureValue,
    pub rank: usize,
    pub k: usize,
    pub iterations_used: usize,
    pub converged: bool,
    #[serde(skip)]
    pub history: Vec<f64>,
    pub best_ensemble: Ensemble,
}

/// `Σ_i p_i R_F(φ_i)` for the ensemble generated by the members `z` (columns).
pub fn ensemble_objective(free: &FreeSet, z: &CMatrix) -> f64 {
    let mut total = 0.0;
    let mut buf = Vec::with_capacity(z.nrows());
    for col in z.column_iter() {
        let p = col.norm_squared();
        if p < hjw::MIN_WEIGHT {
            continue;
        }
        let s = p.sqrt();
        buf.clear();
        buf.extend(col.iter().map(|a| a / s));
        let overlap = max_free_overlap(free, &buf);
        if overlap < ZERO_OVERLAP {
            return f64::INFINITY;
        }
        total += -p * overlap.min(1.0).ln();
    }
    total
}

/// Average measure of an explicit ensemble.
pub fn ensemble_value(free: &FreeSet, ensemble: &Ensemble) -> Result<f64> {
    let mut total = 0.0;
    for (p, phi) in ensemble.weights.iter().zip(&ensemble.states) {
        let v = pure_rugosity(free, phi)?.value;
        if v.is_infinite() {
            return Ok(f64::INFINITY);
        }
        total += p * v;
    }
    Ok(total)
}

/// Convex roof `min Σ p_i R_F(φ_i)` over `k`-member decompositions of `rho`.
///
/// Rank-one input is answered directly from [`pure_rugosity`]. Otherwise the
/// eigen-ensemble seeds the initial population, so the result never exceeds
/// the eigen-ensemble's value.
pub fn convex_roof(
    free: &FreeSet,
    rho: &DensityMatrix,
    k: usize,
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<RoofResult> {
    check_dims(free.dim(), rho.dim())?;
    let d = rho.dim();
    let spec = Spectrum::of(rho);
    let r = spec.rank();
    if k > d * d {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds D² = {}", d * d)));
    }
    if k < r {
        return Err(Error::InvalidArgument(format!("k = {k} is below the state's rank {r}")));
    }

    if r == 1 {
        let phi = PureState::normalized(spec.scaled.column(0).into_owned())?;
        let mut value = pure_rugosity(free, &phi)?;
        value.method = Method::ClosedForm;
        let mut best_ensemble = Ensemble::trivial(phi);
        best_ensemble.source = rho.clone();
        return Ok(RoofResult {
            value,
            rank: 1,
            k,
            iterations_used: 0,
            converged: true,
            history: vec![],
            best_ensemble,
        });
    }

    let objective = |x: &[f64]| match semi_unitary_from_vector(x, k, r) {
        Ok(u) => ensemble_objective(free, &spec.members(&u)),
        Err(_) => f64::INFINITY,
    };
    let bounds = vec![(-1.0, 1.0); 2 * k * r];
    let seeds = [identity_encoding(k, r)];
    let out = differential_evolution_seeded(objective, &bounds, &seeds, config, rng)?;

    let u = semi_unitary_from_vector(&out.best_x, k, r)?;
    let best_ensemble = hjw::ensemble_from_members(rho, &spec.members(&u));
    let value = MeasureValue { value: out.best_value, method: Method::ConvexRoof };
    Ok(RoofResult {
        value,
        rank: r,
        k,
        iterations_used: out.iterations,
        converged: out.converged,
        history: out.history,
        best_ensemble,
    })
}

/// Spread of repeated optimizer runs: the mode and two quantiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    #[serde(serialize_with = "serialize_finite_or_null_vec")]
    pub values: Vec<f64>,
    #[serde(serialize_with = "serialize_finite_or_null")]
    pub mode: f64,
    #[serde(serialize_with = "serialize_finite_or_null")]
    pub quantile_low: f64,
    #[serde(serialize_with = "serialize_finite_or_null")]
    pub quantile_high: f64,
}

pub const QUANTILES: (f64, f64) = (0.05, 0.95);
/// Histogram bin width used to locate the mode.
pub const MODE_BIN: f64 = 1e-3;

/// Nearest-rank quantiles and a histogram mode.
///
/// Quantiles are order statistics at index `round(q·(n−1))`. The mode is
/// taken over values inside `[q_low, q_high]`: they are binned at
/// [`MODE_BIN`], the most populated bin wins (ties go to the lower bin), and
/// its median member is reported, so every field is an actual sample.
pub fn summarize(values: &[f64]) -> Result<TrialSummary> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("summary needs at least one non-NaN value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let at = |q: f64| sorted[(q * (n - 1) as f64).round() as usize];
    let (lo, hi) = (at(QUANTILES.0), at(QUANTILES.1));

    let inside: Vec<f64> = sorted.iter().copied().filter(|&v| v >= lo && v <= hi).collect();
    let mode = if inside[0].is_infinite() {
        f64::INFINITY
    } else {
        let finite: Vec<f64> = inside.iter().copied().filter(|v| v.is_finite()).collect();
        let mut best: &[f64] = &finite[..1];
        let mut start = 0;
        while start < finite.len() {
            let bin = (finite[start] / MODE_BIN).floor();
            let mut end = start;
            while end < finite.len() && (finite[end] / MODE_BIN).floor() == bin {
                end += 1;
            }
            if end - start > best.len() {
                best = &finite[start..end];
            }
            start = end;
        }
        best[(best.len() - 1) / 2]
    };
    Ok(TrialSummary { values: values.to_vec(), mode, quantile_low: lo, quantile_high: hi })
}

/// `n_trials` independent roofs; trial `t` uses stream `t` of `seed`.
pub fn roof_trials(
    free: &FreeSet,
    rho: &DensityMatrix,
    k: usize,
    config: &OptimizerConfig,
    seed: u64,
    n_trials: usize,
) -> Result<(Vec<RoofResult>, TrialSummary)> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be positive".into()));
    }
    let results = (0..n_trials as u64)
        .into_par_iter()
        .map(|t| convex_roof(free, rho, k, config, &mut Rng::derive(seed, t)))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.value.value).collect();
    let summary = summarize(&values)?;
    Ok((results, summary))
}

fn finite_or_null(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn serialize_finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    finite_or_null(*v).serialize(s)
}

fn serialize_finite_or_null_vec<S: serde::Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|x| finite_or_null(*x)).collect::<Vec<_>>().serialize(s)
}
