//! Kraus channels that fix a set of orthogonal free states.
//!
//! With the free states taken as the first `m` computational basis vectors,
//! a fixed-point operation has Kraus operators of block form
//!
//! ```text
//! K_n = [ diag(α_n)  T_n ]
//!       [     0      L_n ]
//! ```
//!
//! with `Σ_n |α_{i,n}|² = 1` for every `i < m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{matrix_from_pairs, matrix_to_pairs, ComplexPair};
use crate::linalg::ops::{self, c, CMatrix, EIGEN_CLAMP};
use crate::linalg::state::check_dims;
use crate::linalg::{DensityMatrix, PureState, Rng};

/// Completeness drift tolerated by [`KrausChannel::new`] and [`apply`].
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Output-trace drift renormalized away by [`apply`].
pub const TRACE_DRIFT: f64 = 1e-10;
/// Outcomes lighter than this are dropped by [`kraus_outcomes`].
pub const MIN_OUTCOME: f64 = 1e-14;
pub const DEFAULT_KRAUS_RANK: usize = 3;
const MAX_CONDITION: f64 = 1e12;
const MAX_DRAWS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<CMatrix>,
    free_dim: Option<usize>,
}

/// Block partition of one Kraus operator.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausBlocks {
    pub alpha: Vec<Complex64>,
    pub t: CMatrix,
    pub l: CMatrix,
}

impl KrausChannel {
    /// Validates shape, completeness within [`COMPLETENESS_TOL`], and, when
    /// `free_dim` is set, the block structure (exact zeros).
    pub fn new(operators: Vec<CMatrix>, free_dim: Option<usize>) -> Result<Self> {
        let first = operators.first().ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let d = first.nrows();
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        for k in &operators {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::InvalidChannel(format!("operator of shape {}×{}, expected {d}×{d}", k.nrows(), k.ncols())));
            }
        }
        let ch = Self { operators, free_dim };
        let err = ch.completeness_error();
        if !(err <= COMPLETENESS_TOL) {
            return Err(Error::InvalidChannel(format!("Σ K†K deviates from identity by {err:.3e}")));
        }
        if let Some(m) = free_dim {
            if m == 0 || m > d {
                return Err(Error::InvalidChannel(format!("free dimension {m} not in 1..={d}")));
            }
            for k in &ch.operators {
                for j in 0..m {
                    for i in 0..d {
                        if i != j && k[(i, j)] != ops::ZERO {
                            return Err(Error::InvalidChannel(format!("operator moves free state {j} (entry ({i},{j}))")));
                        }
                    }
                }
            }
        }
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(vec![ops::identity(dim)], Some(dim))
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn rank(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn free_dim(&self) -> Option<usize> {
        self.free_dim
    }

    /// `‖Σ K†K − I‖_max`
    pub fn completeness_error(&self) -> f64 {
        let d = self.dim();
        let mut sum = CMatrix::zeros(d, d);
        for k in &self.operators {
            sum += k.adjoint() * k;
        }
        ops::max_abs_diff(&sum, &ops::identity(d))
    }

    /// Block view of operator `n`, when a free dimension is set.
    pub fn blocks(&self, n: usize) -> Option<KrausBlocks> {
        let m = self.free_dim?;
        let k = self.operators.get(n)?;
        let d = self.dim();
        Some(KrausBlocks {
            alpha: (0..m).map(|i| k[(i, i)]).collect(),
            t: k.view((0, m), (m, d - m)).into_owned(),
            l: k.view((m, m), (d - m, d - m)).into_owned(),
        })
    }

    /// `next ∘ self`: apply `self` first. Kraus operators are all products
    /// `N_j K_i`.
    pub fn then(&self, next: &KrausChannel) -> Result<KrausChannel> {
        check_dims(self.dim(), next.dim())?;
        let mut ops = Vec::with_capacity(self.rank() * next.rank());
        for n in &next.operators {
            for k in &self.operators {
                ops.push(n * k);
            }
        }
        let free_dim = if self.free_dim == next.free_dim { self.free_dim } else { None };
        KrausChannel::new(ops, free_dim)
    }

    pub fn to_file(&self) -> ChannelFile {
        ChannelFile {
            d: self.dim(),
            m: self.free_dim,
            r: self.rank(),
            operators: self.operators.iter().map(matrix_to_pairs).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("channel serialization")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        file.to_channel()
    }
}

/// On-disk channel: `{"D": d, "m": m | null, "R": r, "operators": [[[re, im], ...], ...]}`
/// with each operator stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    #[serde(rename = "D")]
    pub d: usize,
    pub m: Option<usize>,
    #[serde(rename = "R")]
    pub r: usize,
    pub operators: Vec<Vec<ComplexPair>>,
}

impl ChannelFile {
    pub fn to_channel(&self) -> Result<KrausChannel> {
        if self.operators.len() != self.r {
            return Err(Error::Parse(format!("R = {} but {} operators given", self.r, self.operators.len())));
        }
        let ops = self
            .operators
            .iter()
            .map(|p| matrix_from_pairs(self.d, self.d, p))
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(ops, self.m)
    }
}

/// `Λ(ρ) = Σ K_n ρ K_n†`, re-Hermitized with trace drift up to
/// [`TRACE_DRIFT`] renormalized.
pub fn apply(channel: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_dims(channel.dim(), rho.dim())?;
    let err = channel.completeness_error();
    if !(err <= COMPLETENESS_TOL) {
        return Err(Error::InvalidChannel(format!("Σ K†K deviates from identity by {err:.3e}")));
    }
    let d = rho.dim();
    let mut out = CMatrix::zeros(d, d);
    for k in channel.operators() {
        out += k * rho.matrix() * k.adjoint();
    }
    DensityMatrix::repaired(out, TRACE_DRIFT)
}

/// Random trace-preserving channel fixing `|0⟩, …, |m−1⟩`.
///
/// Nonzero block entries of the unnormalized operators `K̃_n` are standard
/// complex normal. With `M = Σ K̃_n†K̃_n = [[M₀₀, M₀₁], [M₀₁†, M₁₁]]` (`M₀₀`
/// diagonal) and Schur complement `S = M₁₁ − M₀₁†M₀₀⁻¹M₀₁`, the operators
/// are `K_n = K̃_n X` with
///
/// ```text
/// X = [ M₀₀^{-1/2}   −M₀₀⁻¹M₀₁S^{-1/2} ]
///     [     0              S^{-1/2}     ]
/// ```
///
/// so that `X†MX = I`. Draws whose `M₀₀` or `S` has condition number above
/// 1e12 are redrawn, at most 10 times.
pub fn random_fixed_point_channel(d: usize, m: usize, kraus_rank: usize, rng: &mut Rng) -> Result<KrausChannel> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if m == 0 || m > d {
        return Err(Error::InvalidArgument(format!("free dimension m = {m} not in 1..={d}")));
    }
    if kraus_rank == 0 {
        return Err(Error::InvalidArgument("Kraus rank must be positive".into()));
    }
    let mut last = Error::Singular(f64::INFINITY);
    for _ in 0..MAX_DRAWS {
        let raw = draw_block_operators(d, m, kraus_rank, rng);
        match normalizer(&raw, d, m) {
            Ok(x) => {
                let ops = raw.iter().map(|k| k * &x).collect();
                return KrausChannel::new(ops, Some(m));
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn draw_block_operators(d: usize, m: usize, r: usize, rng: &mut Rng) -> Vec<CMatrix> {
    (0..r)
        .map(|_| {
            let mut k = CMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    let free_col = j < m;
                    if (free_col && i == j) || !free_col {
                        k[(i, j)] = rng.complex_normal();
                    }
                }
            }
            k
        })
        .collect()
}

fn normalizer(raw: &[CMatrix], d: usize, m: usize) -> Result<CMatrix> {
    let dm = d - m;
    let m00: Vec<f64> = (0..m).map(|i| raw.iter().map(|k| k[(i, i)].norm_sqr()).sum()).collect();
    let hi = m00.iter().copied().fold(0.0, f64::max);
    let lo = m00.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lo > EIGEN_CLAMP) || hi / lo > MAX_CONDITION {
        return Err(Error::Singular(hi / lo));
    }

    let mut x = CMatrix::zeros(d, d);
    for i in 0..m {
        x[(i, i)] = c(1.0 / m00[i].sqrt(), 0.0);
    }
    if dm == 0 {
        return Ok(x);
    }

    let mut m01 = CMatrix::zeros(m, dm);
    let mut m11 = CMatrix::zeros(dm, dm);
    for k in raw {
        let t = k.view((0, m), (m, dm));
        let l = k.view((m, m), (dm, dm));
        for i in 0..m {
            let a = k[(i, i)].conj();
            for j in 0..dm {
                m01[(i, j)] += a * t[(i, j)];
            }
        }
        m11 += t.adjoint() * t + l.adjoint() * l;
    }
    let mut inv00_m01 = m01.clone();
    for i in 0..m {
        for j in 0..dm {
            inv00_m01[(i, j)] /= m00[i];
        }
    }
    let s = ops::hermitize(&(m11 - m01.adjoint() * &inv00_m01));
    let s_inv_sqrt = ops::inv_sqrt_pd(&s, MAX_CONDITION)?;
    let b = -(inv00_m01 * &s_inv_sqrt);
    x.view_mut((0, m), (m, dm)).copy_from(&b);
    x.view_mut((m, m), (dm, dm)).copy_from(&s_inv_sqrt);
    Ok(x)
}

/// Two-outcome channel whose first operator filters the state
/// `√a|0⟩ + √((1−a)/(D−1)) Σ_{k>0}|k⟩` into the uniform superposition:
/// `K₁ = diag(√((1−a)/(a(D−1))), 1, …, 1)`, `K₂ = √(I − K₁†K₁)`.
pub fn filter_channel(d: usize, a: f64) -> Result<KrausChannel> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if !(0.5..=1.0).contains(&a) {
        return Err(Error::InvalidArgument(format!("a = {a} not in [1/2, 1]")));
    }
    let top = (1.0 - a) / (a * (d as f64 - 1.0));
    let mut k1 = ops::identity(d);
    k1[(0, 0)] = c(top.sqrt(), 0.0);
    let mut k2 = CMatrix::zeros(d, d);
    k2[(0, 0)] = c((1.0 - top).max(0.0).sqrt(), 0.0);
    KrausChannel::new(vec![k1, k2], Some(1))
}

/// The state `√a|0⟩ + √((1−a)/(D−1)) Σ_{k>0}|k⟩`.
pub fn filter_input_state(d: usize, a: f64) -> Result<PureState> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidArgument(format!("a = {a} not in [0, 1]")));
    }
    let rest = ((1.0 - a) / (d as f64 - 1.0)).sqrt();
    let amps: Vec<Complex64> = (0..d).map(|k| c(if k == 0 { a.sqrt() } else { rest }, 0.0)).collect();
    PureState::normalized(crate::linalg::CVector::from_vec(amps))
}

/// Post-measurement ensemble of a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcomes {
    /// `(p_j, K_j ρ K_j†/p_j)` for every retained operator, in operator order.
    pub outcomes: Vec<(usize, f64, DensityMatrix)>,
    /// Operators whose outcome probability fell below [`MIN_OUTCOME`].
    pub omitted: usize,
}

pub fn kraus_outcomes(channel: &KrausChannel, rho: &DensityMatrix) -> Result<Outcomes> {
    check_dims(channel.dim(), rho.dim())?;
    let mut outcomes = Vec::new();
    let mut omitted = 0;
    for (j, k) in channel.operators().iter().enumerate() {
        let branch = k * rho.matrix() * k.adjoint();
        let p = ops::trace(&branch).re;
        if p < MIN_OUTCOME {
            omitted += 1;
            continue;
        }
        outcomes.push((j, p, DensityMatrix::repaired(branch.unscale(p), 1e-8)?));
    }
    Ok(Outcomes { outcomes, omitted })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DestroyingMap {
    /// Projective measurement in the computational basis.
    CompleteDephasing(usize),
    /// The constant map `ρ ↦ τ`.
    DepolarizeTo(DensityMatrix),
}

/// Kraus realization of a resource-destroying map.
///
/// Dephasing uses the projectors `|i⟩⟨i|`. The constant map measures in the
/// computational basis and re-prepares `τ = Σ λ_i|v_i⟩⟨v_i|`, giving
/// operators `√λ_i |v_i⟩⟨j|`.
pub fn resource_destroying_map(kind: &DestroyingMap) -> Result<KrausChannel> {
    match kind {
        DestroyingMap::CompleteDephasing(d) => {
            if *d < 2 {
                return Err(Error::InvalidDimension(*d));
            }
            let ops = (0..*d)
                .map(|i| {
                    let mut p = CMatrix::zeros(*d, *d);
                    p[(i, i)] = ops::ONE;
                    p
                })
                .collect();
            KrausChannel::new(ops, Some(*d))
        }
        DestroyingMap::DepolarizeTo(tau) => {
            let d = tau.dim();
            let (values, vectors) = tau.eigen();
            let mut ops = Vec::new();
            for (i, &lambda) in values.iter().enumerate() {
                if lambda <= EIGEN_CLAMP {
                    continue;
                }
                let v = vectors.column(i).scale(lambda.sqrt());
                for j in 0..d {
                    let mut k = CMatrix::zeros(d, d);
                    k.set_column(j, &v);
                    ops.push(k);
                }
            }
            KrausChannel::new(ops, None)
        }
    }
}
