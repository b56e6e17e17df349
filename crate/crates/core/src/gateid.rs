//! Randomized-input identification of CNOT layers.
//!
//! Identical Haar-random qubits `|χ⟩` are fed through an unknown two-qubit
//! layer. Each output qubit is scored with `Σ_ψ(ρ) = 2⟨ψ|ρ|ψ⟩` and with the
//! same functional for `ψ_H = Hψ` (Hadamard in the lab basis). Averaged over
//! inputs, single-qubit layers give exactly 1 for all four scores, while a
//! CNOT with basis `{c, c'}` gives
//!
//! ```text
//! Σ̄_C = 1 + (2/3) Re⟨ψ|c⟩⟨c'|ψ⟩      Σ̄_T = (2/3)(1 + |⟨ψ|c⟩|²)
//! ```
//!
//! and likewise with `ψ_H`.
//!
//! Tensor ordering: the control is the left factor (index `2·control +
//! target`).
//!
//! In Bloch language, with `n` the Bloch vector of ψ and `(n_c, n_X, n_Y)`
//! the Bloch axes of `|c⟩`, `(|c⟩+|c'⟩)/√2`, `(|c⟩+i|c'⟩)/√2`:
//! `Σ̄_T = 1 + n·n_c/3` and `Σ̄_C = 1 + n·n_X/3`. The protocol is blind
//! exactly when `n` and its Hadamard image are both `±n_Y`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::vector_to_pairs;
use crate::linalg::ops::{self, c, CMatrix, CVector};
use crate::linalg::{bloch_of, haar_unitary, rotation_gate, Axis, BlochVector, PureState, Rng};
use crate::roof::nelder_mead::{nelder_mead, NelderMeadOptions};

const ORTHOGONALITY_TOL: f64 = 1e-12;
const UNITARITY_TOL: f64 = 1e-12;
pub const MIN_SAMPLES: usize = 1000;
pub const DEFAULT_Z_THRESHOLD: f64 = 5.0;
/// Monte Carlo work is split into this many fixed chunks, each with its own
/// derived random stream, so results do not depend on the thread count.
const CHUNKS: u64 = 16;
/// Exact comparison used when a standard error is zero.
const EXACT_TOL: f64 = 1e-9;

/// Orthonormal qubit basis `{|c⟩, |c'⟩}` in which a CNOT acts.
#[derive(Debug, Clone, PartialEq)]
pub struct CnotBasis {
    c: PureState,
    c_prime: PureState,
}

impl CnotBasis {
    pub fn new(c: PureState, c_prime: PureState) -> Result<Self> {
        for s in [&c, &c_prime] {
            if s.dim() != 2 {
                return Err(Error::UnsupportedDimension { expected: 2, got: s.dim() });
            }
        }
        let ov = c.inner(&c_prime)?.norm();
        if ov > ORTHOGONALITY_TOL {
            return Err(Error::InvalidArgument(format!("basis states are not orthogonal (|⟨c|c'⟩| = {ov:.3e})")));
        }
        Ok(Self { c, c_prime })
    }

    pub fn computational() -> Self {
        Self { c: PureState::basis(2, 0).unwrap(), c_prime: PureState::basis(2, 1).unwrap() }
    }

    /// Columns of a 2×2 unitary.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        if u.nrows() != 2 || u.ncols() != 2 {
            return Err(Error::UnsupportedDimension { expected: 2, got: u.nrows() });
        }
        let err = ops::unitarity_error(u);
        if err > UNITARITY_TOL {
            return Err(Error::InvalidArgument(format!("frame is not unitary (error {err:.3e})")));
        }
        Self::new(
            PureState::normalized(u.column(0).into_owned())?,
            PureState::normalized(u.column(1).into_owned())?,
        )
    }

    /// `|c⟩` at Bloch angles `(θ, φ)` and `|c'⟩` at the antipode, with the
    /// phase convention `|c'⟩ = sin(θ/2)|0⟩ − e^{iφ}cos(θ/2)|1⟩`.
    pub fn from_bloch_angles(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidArgument("Bloch angles must be finite".into()));
        }
        Self::new(PureState::qubit(theta, phi), PureState::qubit(std::f64::consts::PI - theta, phi + std::f64::consts::PI))
    }

    pub fn random(rng: &mut Rng) -> Self {
        Self::from_unitary(&haar_unitary(2, rng).expect("dim 2")).expect("Haar unitary")
    }

    /// Basis with Bloch axes `n_c` and `n_x`, which must be orthonormal.
    pub fn from_axes(n_c: [f64; 3], n_x: [f64; 3]) -> Result<Self> {
        let (theta, phi) = angles_of(n_c);
        let c0 = PureState::qubit(theta, phi);
        let mut c1 = PureState::qubit(std::f64::consts::PI - theta, phi + std::f64::consts::PI);
        let x0 = bloch_of(&superpose(&c0, &c1, c(1.0, 0.0)))?.as_array();
        let y0 = cross(n_c, x0);
        let alpha = dot3(n_x, y0).atan2(dot3(n_x, x0));
        c1 = PureState::normalized(c1.amplitudes() * Complex64::from_polar(1.0, alpha))?;
        Self::new(c0, c1)
    }

    pub fn c(&self) -> &PureState {
        &self.c
    }

    pub fn c_prime(&self) -> &PureState {
        &self.c_prime
    }

    /// `V = [c, c']` (columns).
    pub fn frame(&self) -> CMatrix {
        CMatrix::from_columns(&[self.c.amplitudes().clone(), self.c_prime.amplitudes().clone()])
    }

    /// Bloch axes `(n_c, n_X, n_Y)` of the basis frame.
    pub fn axes(&self) -> [[f64; 3]; 3] {
        let n_c = bloch_of(&self.c).unwrap().as_array();
        let n_x = bloch_of(&superpose(&self.c, &self.c_prime, c(1.0, 0.0))).unwrap().as_array();
        let n_y = bloch_of(&superpose(&self.c, &self.c_prime, c(0.0, 1.0))).unwrap().as_array();
        [n_c, n_x, n_y]
    }

    /// Largest angle between corresponding `n_c` and `n_X` axes.
    pub fn axis_distance(&self, other: &CnotBasis) -> f64 {
        let (a, b) = (self.axes(), other.axes());
        angle3(a[0], b[0]).max(angle3(a[1], b[1]))
    }
}

impl Serialize for CnotBasis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let axes = self.axes();
        let mut st = s.serialize_struct("CnotBasis", 4)?;
        st.serialize_field("c", &vector_to_pairs(self.c.amplitudes()))?;
        st.serialize_field("c_prime", &vector_to_pairs(self.c_prime.amplitudes()))?;
        st.serialize_field("bloch_c", &axes[0])?;
        st.serialize_field("bloch_x", &axes[1])?;
        st.end()
    }
}

fn superpose(a: &PureState, b: &PureState, phase: Complex64) -> PureState {
    PureState::normalized(a.amplitudes() + b.amplitudes() * phase).expect("orthogonal superposition")
}

/// CNOT acting in `basis`: `(V⊗V) CNOT (V⊗V)†` with `V = [c, c']`.
pub fn cnot_in_basis(basis: &CnotBasis) -> CMatrix {
    let v = basis.frame();
    let vv = ops::kron(&v, &v);
    &vv * ops::cnot_standard() * vv.adjoint()
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    /// The same single-qubit unitary on both qubits.
    SingleQubitUnitary(CMatrix),
    Cnot(CnotBasis),
}

impl LayerSpec {
    pub fn single(u: CMatrix) -> Result<Self> {
        if u.nrows() != 2 || u.ncols() != 2 {
            return Err(Error::UnsupportedDimension { expected: 2, got: u.nrows() });
        }
        let err = ops::unitarity_error(&u);
        if err > UNITARITY_TOL {
            return Err(Error::InvalidArgument(format!("layer is not unitary (error {err:.3e})")));
        }
        Ok(LayerSpec::SingleQubitUnitary(u))
    }

    /// Two-qubit unitary of the layer.
    pub fn unitary(&self) -> CMatrix {
        match self {
            LayerSpec::SingleQubitUnitary(u) => ops::kron(u, u),
            LayerSpec::Cnot(b) => cnot_in_basis(b),
        }
    }
}

/// The four averaged scores, in the order control, target, control (ψ_H),
/// target (ψ_H).
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEstimates {
    pub sigma_c: f64,
    pub sigma_t: f64,
    pub sigma_c_h: f64,
    pub sigma_t_h: f64,
    pub std_err: [f64; 4],
    /// `None` for closed-form values.
    pub n_samples: Option<usize>,
    /// Reference state ψ the scores refer to.
    pub psi: PureState,
}

impl SigmaEstimates {
    pub fn values(&self) -> [f64; 4] {
        [self.sigma_c, self.sigma_t, self.sigma_c_h, self.sigma_t_h]
    }
}

impl Serialize for SigmaEstimates {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SigmaEstimates", 7)?;
        st.serialize_field("sigma_c", &self.sigma_c)?;
        st.serialize_field("sigma_t", &self.sigma_t)?;
        st.serialize_field("sigma_c_h", &self.sigma_c_h)?;
        st.serialize_field("sigma_t_h", &self.sigma_t_h)?;
        st.serialize_field("std_err", &self.std_err)?;
        st.serialize_field("n_samples", &self.n_samples)?;
        st.serialize_field("psi", &vector_to_pairs(self.psi.amplitudes()))?;
        st.end()
    }
}

fn check_qubit(psi: &PureState) -> Result<()> {
    if psi.dim() != 2 {
        return Err(Error::UnsupportedDimension { expected: 2, got: psi.dim() });
    }
    Ok(())
}

/// `Hψ` with `H` the lab-basis Hadamard.
pub fn hadamard_image(psi: &PureState) -> Result<PureState> {
    check_qubit(psi)?;
    psi.evolve(&ops::hadamard())
}

/// Exact averages for a CNOT layer in `basis`.
pub fn closed_form_averages(psi: &PureState, basis: &CnotBasis) -> Result<SigmaEstimates> {
    check_qubit(psi)?;
    let psi_h = hadamard_image(psi)?;
    let scores = |p: &PureState| -> Result<(f64, f64)> {
        let pc = p.inner(basis.c())?;
        let cp = basis.c_prime().inner(p)?;
        Ok((1.0 + 2.0 / 3.0 * (pc * cp).re, 2.0 / 3.0 * (1.0 + pc.norm_sqr())))
    };
    let (sc, st) = scores(psi)?;
    let (sch, sth) = scores(&psi_h)?;
    Ok(SigmaEstimates {
        sigma_c: sc,
        sigma_t: st,
        sigma_c_h: sch,
        sigma_t_h: sth,
        std_err: [0.0; 4],
        n_samples: None,
        psi: psi.clone(),
    })
}

/// Exact averages for any single-qubit layer: all four scores are 1.
pub fn single_qubit_averages(psi: &PureState) -> Result<SigmaEstimates> {
    check_qubit(psi)?;
    Ok(SigmaEstimates {
        sigma_c: 1.0,
        sigma_t: 1.0,
        sigma_c_h: 1.0,
        sigma_t_h: 1.0,
        std_err: [0.0; 4],
        n_samples: None,
        psi: psi.clone(),
    })
}

/// Monte Carlo run of the protocol with `n_samples` Haar-random inputs.
///
/// One draw from `rng` seeds [`CHUNKS`] derived streams; chunk sums are
/// combined in a fixed order.
pub fn monte_carlo_protocol(
    layer: &LayerSpec,
    psi: &PureState,
    n_samples: usize,
    rng: &mut Rng,
) -> Result<SigmaEstimates> {
    check_qubit(psi)?;
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} samples, got {n_samples}")));
    }
    let u = layer.unitary();
    let mut l = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (i, row) in l.iter_mut().enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            *z = u[(i, j)];
        }
    }
    let psi_h = hadamard_image(psi)?;
    let refs = [conj2(psi), conj2(&psi_h)];
    let base = rng.next_u64();

    let chunk_sums: Vec<[[f64; 2]; 4]> = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let count = n_samples / CHUNKS as usize + usize::from((chunk as usize) < n_samples % CHUNKS as usize);
            let mut stream = Rng::derive(base, chunk);
            let mut acc = [[0.0; 2]; 4];
            for _ in 0..count {
                let scores = sample_scores(&l, &refs, &mut stream);
                for (a, s) in acc.iter_mut().zip(scores) {
                    a[0] += s;
                    a[1] += s * s;
                }
            }
            acc
        })
        .collect();

    let mut total = [[0.0; 2]; 4];
    for sums in &chunk_sums {
        for (t, s) in total.iter_mut().zip(sums) {
            t[0] += s[0];
            t[1] += s[1];
        }
    }
    let n = n_samples as f64;
    let mut mean = [0.0; 4];
    let mut se = [0.0; 4];
    for q in 0..4 {
        mean[q] = total[q][0] / n;
        let var = ((total[q][1] - n * mean[q] * mean[q]) / (n - 1.0)).max(0.0);
        se[q] = (var / n).sqrt();
    }
    Ok(SigmaEstimates {
        sigma_c: mean[0],
        sigma_t: mean[1],
        sigma_c_h: mean[2],
        sigma_t_h: mean[3],
        std_err: se,
        n_samples: Some(n_samples),
        psi: psi.clone(),
    })
}

fn conj2(p: &PureState) -> [Complex64; 2] {
    let a = p.amplitudes();
    [a[0].conj(), a[1].conj()]
}

/// Scores `[Σ_ψ(ρ^C), Σ_ψ(ρ^T), Σ_ψH(ρ^C), Σ_ψH(ρ^T)]` for one random input.
fn sample_scores(l: &[[Complex64; 4]; 4], refs: &[[Complex64; 2]; 2], rng: &mut Rng) -> [f64; 4] {
    let (a, b) = loop {
        let a = rng.complex_normal();
        let b = rng.complex_normal();
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if n > 1e-150 {
            break (a / n, b / n);
        }
    };
    let input = [a * a, a * b, b * a, b * b];
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (o, row) in out.iter_mut().zip(l) {
        *o = row.iter().zip(&input).map(|(x, y)| x * y).sum();
    }
    let mut scores = [0.0; 4];
    for (r, psi) in refs.iter().enumerate() {
        // 2⟨ψ|ρ^C|ψ⟩ = 2 Σ_t |Σ_i ψ_i* Ψ_{2i+t}|², and symmetrically for T.
        let mut control = 0.0;
        let mut target = 0.0;
        for k in 0..2 {
            control += (psi[0] * out[k] + psi[1] * out[2 + k]).norm_sqr();
            target += (psi[0] * out[2 * k] + psi[1] * out[2 * k + 1]).norm_sqr();
        }
        scores[2 * r] = 2.0 * control;
        scores[2 * r + 1] = 2.0 * target;
    }
    scores
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CnotDetected,
    SingleQubitConsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub verdict: Verdict,
    /// `(estimate − 1)/std_err`; `±∞` for exact inputs that differ from 1.
    pub z_scores: [f64; 4],
    pub z_threshold: f64,
    pub basis_candidates: Vec<CnotBasis>,
    /// Why reconstruction produced no candidates, if it was attempted and failed.
    pub reconstruction_note: Option<String>,
}

/// Flags a CNOT when any score deviates from 1 by more than `z_threshold`
/// standard errors; exact inputs are compared at 1e-9.
pub fn detect_cnot(est: &SigmaEstimates, z_threshold: f64) -> Result<DetectionReport> {
    if !(z_threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("z threshold must be positive, got {z_threshold}")));
    }
    let mut z = [0.0; 4];
    for (q, (v, se)) in est.values().iter().zip(est.std_err).enumerate() {
        let dev = v - 1.0;
        z[q] = if se > 0.0 {
            dev / se
        } else if dev.abs() <= EXACT_TOL {
            0.0
        } else {
            f64::INFINITY.copysign(dev)
        };
    }
    let detected = z.iter().any(|v| v.abs() > z_threshold);
    let (candidates, note) = if detected {
        match reconstruct_basis_candidates(est, &est.psi) {
            Ok(c) => (c, None),
            Err(e) => (vec![], Some(e.to_string())),
        }
    } else {
        (vec![], None)
    };
    Ok(DetectionReport {
        verdict: if detected { Verdict::CnotDetected } else { Verdict::SingleQubitConsistent },
        z_scores: z,
        z_threshold,
        basis_candidates: candidates,
        reconstruction_note: note,
    })
}

/// Bases consistent with the four scores.
///
/// The scores fix `n·n_c`, `m·n_c`, `n·n_X` and `m·n_X`, where `n`, `m` are
/// the Bloch vectors of ψ and Hψ. A 10⁴-point Fibonacci grid over `n_c`,
/// crossed with 72 orientations of `n_X` in the plane normal to `n_c`, seeds
/// Nelder–Mead refinement; refined frames whose residuals lie within three
/// standard errors (plus 1e-6) of every constraint are returned,
/// deduplicated at 1e-3 rad.
pub fn reconstruct_basis_candidates(est: &SigmaEstimates, psi: &PureState) -> Result<Vec<CnotBasis>> {
    check_qubit(psi)?;
    let n = bloch_of(psi)?.as_array();
    let m = bloch_of(&hadamard_image(psi)?)?.as_array();
    if norm3(cross(n, m)) < 1e-6 {
        return Err(Error::DegenerateContinuum);
    }
    let v = est.values();
    // Constraint order: n·n_c, m·n_c, n·n_X, m·n_X.
    let targets = [3.0 * (v[1] - 1.0), 3.0 * (v[3] - 1.0), 3.0 * (v[0] - 1.0), 3.0 * (v[2] - 1.0)];
    let se = est.std_err;
    let tol = [9.0 * se[1] + 1e-6, 9.0 * se[3] + 1e-6, 9.0 * se[0] + 1e-6, 9.0 * se[2] + 1e-6];

    let residuals = |p: &[f64]| -> [f64; 4] {
        let (nc, nx) = frame_from_params(p);
        [dot3(n, nc) - targets[0], dot3(m, nc) - targets[1], dot3(n, nx) - targets[2], dot3(m, nx) - targets[3]]
    };
    let objective = |p: &[f64]| -> f64 { residuals(p).iter().zip(&tol).map(|(r, t)| (r / t).powi(2)).sum() };

    const GRID: usize = 10_000;
    const TURNS: usize = 72;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut scored: Vec<(f64, [f64; 3])> = (0..GRID)
        .into_par_iter()
        .flat_map_iter(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / GRID as f64;
            let theta = z.clamp(-1.0, 1.0).acos();
            let phi = golden * i as f64;
            (0..TURNS).map(move |t| [theta, phi, std::f64::consts::TAU * t as f64 / TURNS as f64])
        })
        .map(|p| (objective(&p), p))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let opts = NelderMeadOptions { step: 0.02, max_iterations: 4000, f_tol: 1e-20, x_tol: 1e-12 };
    let mut found: Vec<CnotBasis> = Vec::new();
    for (_, p) in scored.iter().take(400) {
        let (best, _) = nelder_mead(objective, p, &opts);
        let res = residuals(&best);
        if res.iter().zip(&tol).any(|(r, t)| r.abs() > *t) {
            continue;
        }
        let (nc, nx) = frame_from_params(&best);
        let basis = CnotBasis::from_axes(nc, nx)?;
        if found.iter().all(|b| b.axis_distance(&basis) > 1e-3) {
            found.push(basis);
        }
        if found.len() == 4 {
            break;
        }
    }
    if found.is_empty() {
        Err(Error::NoCandidates)
    } else {
        Ok(found)
    }
}

/// `(θ, φ, α)` → `(n_c, n_X)` with `n_X` at angle `α` in the plane normal to `n_c`.
fn frame_from_params(p: &[f64]) -> ([f64; 3], [f64; 3]) {
    let (st, ct) = p[0].sin_cos();
    let (sp, cp) = p[1].sin_cos();
    let nc = [st * cp, st * sp, ct];
    let e1 = [ct * cp, ct * sp, -st];
    let e2 = [-sp, cp, 0.0];
    let (sa, ca) = p[2].sin_cos();
    let nx = [ca * e1[0] + sa * e2[0], ca * e1[1] + sa * e2[1], ca * e1[2] + sa * e2[2]];
    (nc, nx)
}

/// The lab-basis Hadamard acts on the Bloch sphere as a half turn about this axis.
pub const HADAMARD_AXIS: [f64; 3] = [std::f64::consts::FRAC_1_SQRT_2, 0.0, std::f64::consts::FRAC_1_SQRT_2];

/// A member of the failure family: the CNOT basis given by
/// `U = e^{iμ} R_y(π/4) R_z(ν₂)` (columns `U|0⟩`, `U|1⟩`) and the states
/// `Uψ± = U(|0⟩ ± i|1⟩)/√2`, for which every averaged score equals 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureFamily {
    pub unitary: CMatrix,
    pub basis: CnotBasis,
    pub psi_plus: PureState,
    pub psi_minus: PureState,
}

pub fn failure_unitary(mu: f64, nu2: f64) -> CMatrix {
    (rotation_gate(Axis::Y, std::f64::consts::FRAC_PI_4) * rotation_gate(Axis::Z, nu2)) * Complex64::from_polar(1.0, mu)
}

pub fn failure_family(mu: f64, nu2: f64) -> Result<FailureFamily> {
    if !mu.is_finite() || !nu2.is_finite() {
        return Err(Error::InvalidArgument("failure-family angles must be finite".into()));
    }
    let u = failure_unitary(mu, nu2);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = CVector::from_vec(vec![c(s, 0.0), c(0.0, s)]);
    let minus = CVector::from_vec(vec![c(s, 0.0), c(0.0, -s)]);
    Ok(FailureFamily {
        basis: CnotBasis::from_unitary(&u)?,
        psi_plus: PureState::normalized(&u * plus)?,
        psi_minus: PureState::normalized(&u * minus)?,
        unitary: u,
    })
}

/// Bloch angle from ψ to the union of all failure states over all bases:
/// the great circle normal to [`HADAMARD_AXIS`] and the two Hadamard
/// eigenstates `±HADAMARD_AXIS`. Away from this set, some score deviates
/// from 1 for every basis.
pub fn failure_set_distance(psi: &PureState) -> Result<f64> {
    check_qubit(psi)?;
    let n = bloch_of(psi)?.as_array();
    let to_circle = dot3(n, HADAMARD_AXIS).abs().min(1.0).asin();
    Ok(to_circle.min(std::f64::consts::FRAC_PI_2 - to_circle))
}

/// Bloch angle from ψ to the nearest state for which the protocol is blind
/// to a CNOT in `basis`, or `None` when the basis admits no such state.
///
/// Blind states exist only when `n_Y` is normal or parallel to
/// [`HADAMARD_AXIS`] (within `tol`); they are then `±n_Y`.
pub fn failure_distance(psi: &PureState, basis: &CnotBasis, tol: f64) -> Result<Option<f64>> {
    check_qubit(psi)?;
    let n_y = basis.axes()[2];
    let along = dot3(n_y, HADAMARD_AXIS).abs();
    if along > tol && along < 1.0 - tol {
        return Ok(None);
    }
    let n = bloch_of(psi)?.as_array();
    Ok(Some(angle3(n, n_y).min(angle3(n, [-n_y[0], -n_y[1], -n_y[2]]))))
}

/// Pure qubit with the given (unit) Bloch vector.
pub fn state_from_bloch(v: [f64; 3]) -> Result<PureState> {
    let b = BlochVector::new(v[0], v[1], v[2])?;
    let len = b.norm();
    if (len - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidBloch(len));
    }
    let (theta, phi) = angles_of(v);
    Ok(PureState::qubit(theta, phi))
}

fn angles_of(v: [f64; 3]) -> (f64, f64) {
    let r = norm3(v);
    ((v[2] / r).clamp(-1.0, 1.0).acos(), v[1].atan2(v[0]))
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn angle3(a: [f64; 3], b: [f64; 3]) -> f64 {
    // atan2 form stays accurate for nearly parallel vectors.
    norm3(cross(a, b)).atan2(dot3(a, b))
}
