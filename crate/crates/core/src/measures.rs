//! Rugosity and related resource measures.
//!
//! All logarithms are natural. A measure is reported as `+∞` when the best
//! overlap (or fidelity) with the free set is below [`ZERO_OVERLAP`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ops::{self, CMatrix};
use crate::linalg::state::check_dims;
use crate::linalg::{bloch_from_qubit, fidelity, DensityMatrix, PureState, Rng};
use crate::roof::de::{differential_evolution_seeded, OptimizerConfig};
use crate::roof::nelder_mead::{nelder_mead, NelderMeadOptions};

/// Overlaps below this are treated as exactly zero.
pub const ZERO_OVERLAP: f64 = 1e-14;
/// Eigenvalue threshold used to decide whether a state is pure.
pub const RANK_THRESHOLD: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-10;
const LOGIT_BOUND: f64 = 30.0;

/// The set of zero-resource states.
#[derive(Debug, Clone, PartialEq)]
pub enum FreeSet {
    SinglePure(PureState),
    /// Convex hull of mutually orthogonal pure states.
    OrthogonalPure(Vec<PureState>),
    /// Diagonal states in the computational basis of the given dimension.
    IncoherentDiagonal(usize),
    /// States with real entries in the computational basis.
    RealStates(usize),
    SingleMixed(DensityMatrix),
}

impl FreeSet {
    pub fn single_pure(psi: PureState) -> Self {
        FreeSet::SinglePure(psi)
    }

    pub fn orthogonal_pure(states: Vec<PureState>) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::InvalidFreeSet("no states given".into()))?;
        let dim = first.dim();
        if states.len() > dim {
            return Err(Error::InvalidFreeSet(format!("{} orthogonal states cannot fit in dimension {dim}", states.len())));
        }
        for (i, a) in states.iter().enumerate() {
            check_dims(dim, a.dim())?;
            for b in &states[..i] {
                let ov = a.inner(b)?.norm();
                if ov > ORTHOGONALITY_TOL {
                    return Err(Error::InvalidFreeSet(format!("states are not orthogonal (|⟨a|b⟩| = {ov:.3e})")));
                }
            }
        }
        Ok(FreeSet::OrthogonalPure(states))
    }

    /// The first `m` computational basis states of dimension `dim`.
    pub fn basis_subset(dim: usize, m: usize) -> Result<Self> {
        if m == 0 || m > dim {
            return Err(Error::InvalidFreeSet(format!("need 1 ≤ m ≤ {dim}, got m = {m}")));
        }
        let states = (0..m).map(|i| PureState::basis(dim, i)).collect::<Result<Vec<_>>>()?;
        Ok(FreeSet::OrthogonalPure(states))
    }

    pub fn incoherent(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(FreeSet::IncoherentDiagonal(dim))
    }

    pub fn real_states(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(FreeSet::RealStates(dim))
    }

    pub fn single_mixed(tau: DensityMatrix) -> Self {
        FreeSet::SingleMixed(tau)
    }

    pub fn dim(&self) -> usize {
        match self {
            FreeSet::SinglePure(psi) => psi.dim(),
            FreeSet::OrthogonalPure(states) => states[0].dim(),
            FreeSet::IncoherentDiagonal(d) | FreeSet::RealStates(d) => *d,
            FreeSet::SingleMixed(tau) => tau.dim(),
        }
    }

    /// Short label for reports and manifests.
    pub fn label(&self) -> String {
        match self {
            FreeSet::SinglePure(_) => "single_pure".into(),
            FreeSet::OrthogonalPure(s) => format!("orthogonal_pure:{}", s.len()),
            FreeSet::IncoherentDiagonal(_) => "incoherent".into(),
            FreeSet::RealStates(_) => "real".into(),
            FreeSet::SingleMixed(_) => "single_mixed".into(),
        }
    }

    /// Orthogonal pure extreme points, when the set is their convex hull.
    pub fn orthogonal_extremes(&self) -> Option<Vec<PureState>> {
        match self {
            FreeSet::SinglePure(psi) => Some(vec![psi.clone()]),
            FreeSet::OrthogonalPure(states) => Some(states.clone()),
            FreeSet::IncoherentDiagonal(d) => Some((0..*d).map(|i| PureState::basis(*d, i).unwrap()).collect()),
            _ => None,
        }
    }

    /// Whether `rho` lies in the set, up to `tol` in the max-entry norm.
    pub fn contains(&self, rho: &DensityMatrix, tol: f64) -> Result<bool> {
        check_dims(self.dim(), rho.dim())?;
        let m = rho.matrix();
        Ok(match self {
            FreeSet::RealStates(_) => m.iter().all(|z| z.im.abs() <= tol),
            FreeSet::SingleMixed(tau) => rho.distance_max(tau) <= tol,
            _ => {
                let extremes = self.orthogonal_extremes().unwrap();
                let mut projected = CMatrix::zeros(rho.dim(), rho.dim());
                for psi in &extremes {
                    projected += psi.projector().scale(rho.expectation(psi)?);
                }
                ops::max_abs_diff(&projected, m) <= tol
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Direct,
    LowerBound,
    ConvexRoof,
}

/// A measure value; `value` is `f64::INFINITY` for states with zero overlap
/// with the free set. Serializes as `{"value": x | null, "infinite": bool,
/// "method": ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "MeasureRepr", try_from = "MeasureRepr")]
pub struct MeasureValue {
    pub value: f64,
    pub method: Method,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    value: Option<f64>,
    infinite: bool,
    method: Method,
}

impl From<MeasureValue> for MeasureRepr {
    fn from(m: MeasureValue) -> Self {
        let infinite = m.value.is_infinite();
        MeasureRepr { value: (!infinite).then_some(m.value), infinite, method: m.method }
    }
}

impl TryFrom<MeasureRepr> for MeasureValue {
    type Error = String;

    fn try_from(r: MeasureRepr) -> std::result::Result<Self, String> {
        match (r.infinite, r.value) {
            (true, _) => Ok(MeasureValue { value: f64::INFINITY, method: r.method }),
            (false, Some(v)) => Ok(MeasureValue { value: v, method: r.method }),
            (false, None) => Err("finite measure without a value".into()),
        }
    }
}

impl MeasureValue {
    /// `−ln(overlap)`, or `+∞` below [`ZERO_OVERLAP`].
    pub fn from_overlap(overlap: f64, method: Method) -> Self {
        let value = if overlap < ZERO_OVERLAP { f64::INFINITY } else { -overlap.min(1.0).ln() };
        MeasureValue { value, method }
    }

    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

/// `Σ_ψ(ρ) = D⟨ψ|ρ|ψ⟩`
pub fn sigma_functional(psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    Ok(rho.dim() as f64 * rho.expectation(psi)?)
}

/// `R_ψ(ρ) = −ln⟨ψ|ρ|ψ⟩`
pub fn rugosity_single(psi: &PureState, rho: &DensityMatrix) -> Result<MeasureValue> {
    Ok(MeasureValue::from_overlap(rho.expectation(psi)?, Method::Direct))
}

/// `−ln max_{ψ∈F} |⟨φ|ψ⟩|²` over the pure extreme points of the free set.
pub fn pure_rugosity(free: &FreeSet, phi: &PureState) -> Result<MeasureValue> {
    check_dims(free.dim(), phi.dim())?;
    Ok(MeasureValue::from_overlap(max_free_overlap(free, phi.amplitudes().as_slice()), Method::Direct))
}

/// Largest fidelity between the pure state with amplitudes `phi` (assumed
/// normalized, correct length) and the free set.
pub(crate) fn max_free_overlap(free: &FreeSet, phi: &[Complex64]) -> f64 {
    match free {
        FreeSet::SinglePure(psi) => dot(psi.amplitudes().as_slice(), phi).norm_sqr(),
        FreeSet::OrthogonalPure(states) => states
            .iter()
            .map(|psi| dot(psi.amplitudes().as_slice(), phi).norm_sqr())
            .fold(0.0, f64::max),
        FreeSet::IncoherentDiagonal(_) => phi.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max),
        FreeSet::RealStates(_) => real_part_top_eigenvalue(phi),
        FreeSet::SingleMixed(tau) => {
            let m = tau.matrix();
            let n = phi.len();
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let mut row = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    row += m[(i, j)] * phi[j];
                }
                acc += phi[i].conj() * row;
            }
            acc.re
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `λ_max(Re|φ⟩⟨φ|)`. With `φ = a + ib`, `Re|φ⟩⟨φ| = aaᵀ + bbᵀ`, whose
/// nonzero spectrum is that of the 2×2 Gram matrix of `a` and `b`.
fn real_part_top_eigenvalue(phi: &[Complex64]) -> f64 {
    let (mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0);
    for z in phi {
        aa += z.re * z.re;
        bb += z.im * z.im;
        ab += z.re * z.im;
    }
    let half_gap = 0.5 * ((aa - bb).powi(2) + 4.0 * ab * ab).sqrt();
    0.5 * (aa + bb) + half_gap
}

/// `R̲_F(ρ) = −ln max_{σ∈F} F(ρ,σ)`.
///
/// Single-state sets are evaluated directly. For orthogonal and incoherent
/// sets the maximum runs over the probability simplex of the extreme points:
/// differential evolution over softmax logits, then a simplex polish. Pure
/// `ρ` is exact since the maximum then sits at a vertex.
pub fn lower_bound_measure(
    free: &FreeSet,
    rho: &DensityMatrix,
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<MeasureValue> {
    check_dims(free.dim(), rho.dim())?;
    let lb = |f: f64| MeasureValue::from_overlap(f, Method::LowerBound);
    let pure = pure_state_of(rho);
    match free {
        FreeSet::SinglePure(psi) => Ok(lb(rho.expectation(psi)?)),
        FreeSet::SingleMixed(tau) => Ok(lb(fidelity(rho, tau)?)),
        FreeSet::RealStates(_) => match pure {
            Some(phi) => Ok(lb(max_free_overlap(free, phi.amplitudes().as_slice()))),
            None => Err(Error::UnsupportedVariant("real-state lower bound of a mixed state")),
        },
        FreeSet::OrthogonalPure(_) | FreeSet::IncoherentDiagonal(_) => {
            if let Some(phi) = pure {
                return Ok(lb(max_free_overlap(free, phi.amplitudes().as_slice())));
            }
            let extremes = free.orthogonal_extremes().unwrap();
            Ok(lb(max_simplex_fidelity(rho, &extremes, config, rng)?))
        }
    }
}

/// The dominant eigenvector when `rho` has rank one.
pub(crate) fn pure_state_of(rho: &DensityMatrix) -> Option<PureState> {
    let (values, vectors) = rho.eigen();
    if values.iter().skip(1).any(|&v| v > RANK_THRESHOLD) {
        return None;
    }
    PureState::normalized(vectors.column(0).into_owned()).ok()
}

/// `max_p F(ρ, Σ p_k|ψ_k⟩⟨ψ_k|)` for orthonormal `ψ_k`.
///
/// With `W_kl = ⟨ψ_k|ρ|ψ_l⟩` and `P = diag(√p)`, the fidelity equals
/// `(tr√(P W P))²`, so only an m×m eigenproblem is needed per evaluation.
fn max_simplex_fidelity(
    rho: &DensityMatrix,
    extremes: &[PureState],
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<f64> {
    let m = extremes.len();
    let mut w = CMatrix::zeros(m, m);
    let rm = rho.matrix();
    for k in 0..m {
        let rk = rm * extremes[k].amplitudes();
        for l in 0..m {
            w[(l, k)] = extremes[l].amplitudes().dotc(&rk);
        }
    }
    if m == 1 {
        return Ok(w[(0, 0)].re.clamp(0.0, 1.0));
    }

    let root_fidelity = |p: &[f64]| -> f64 {
        let mut pwp = w.clone();
        for i in 0..m {
            for j in 0..m {
                pwp[(i, j)] *= (p[i] * p[j]).sqrt();
            }
        }
        let (values, _) = ops::eigh(&pwp);
        values.iter().map(|&v| v.max(0.0).sqrt()).sum()
    };
    let objective = |z: &[f64]| -root_fidelity(&softmax(z));

    let mut seeds: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    seeds.push((0..m).map(|k| w[(k, k)].re.max(1e-13).ln().max(-LOGIT_BOUND)).collect());
    for k in 0..m {
        seeds.push((0..m).map(|j| if j == k { LOGIT_BOUND } else { -LOGIT_BOUND }).collect());
    }
    let bounds = vec![(-LOGIT_BOUND, LOGIT_BOUND); m];
    let mut sub = rng.child();
    let out = differential_evolution_seeded(objective, &bounds, &seeds, config, &mut sub)?;
    let opts = NelderMeadOptions { step: 0.5, max_iterations: 4000, f_tol: 1e-15, x_tol: 1e-10 };
    let (_, polished) = nelder_mead(objective, &out.best_x, &opts);
    let best = (-polished).max(-out.best_value);
    Ok((best * best).clamp(0.0, 1.0))
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Imaginarity of a qubit: `−ln((1 + √(1 − r_y²))/2)`.
pub fn qubit_imaginarity(rho: &DensityMatrix) -> Result<MeasureValue> {
    let r = bloch_from_qubit(rho)?;
    Ok(qubit_closed_form(r.y * r.y))
}

/// Coherence of a qubit: `−ln((1 + √(1 − r_⊥²))/2)`, `r_⊥² = r_x² + r_y²`.
pub fn qubit_coherence(rho: &DensityMatrix) -> Result<MeasureValue> {
    let r = bloch_from_qubit(rho)?;
    Ok(qubit_closed_form(r.x * r.x + r.y * r.y))
}

fn qubit_closed_form(r2: f64) -> MeasureValue {
    let value = -((1.0 + (1.0 - r2).max(0.0).sqrt()) / 2.0).ln();
    MeasureValue { value: value.max(0.0), method: Method::ClosedForm }
}
