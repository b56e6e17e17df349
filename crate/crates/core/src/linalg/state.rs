use serde::{Deserialize, Serialize};

use super::ops::{self, c, CMatrix, CVector, ONE, ZERO};
use super::rng::Rng;
use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_FLOOR, 0)` are treated as roundoff.
pub const PSD_FLOOR: f64 = 1e-10;

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    pub fn new(amps: CVector) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidDimension(amps.len()));
        }
        let n2 = amps.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: CVector) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidDimension(amps.len()));
        }
        let n = amps.norm();
        if n < 1e-300 || !n.is_finite() {
            return Err(Error::NotNormalized(n * n));
        }
        Ok(Self { amps: amps.unscale(n) })
    }

    pub fn from_slice(amps: &[num_complex::Complex64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amps))
    }

    /// Computational basis ket `|index⟩` (zero-based).
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range for dim {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Ok(Self { amps: v })
    }

    /// The uniform superposition `(1/√D) Σ|i⟩`.
    pub fn uniform(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let a = c(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self { amps: CVector::from_element(dim, a) })
    }

    /// Qubit with Bloch angles `(θ, φ)`: `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn qubit(theta: f64, phi: f64) -> Self {
        let amps = CVector::from_vec(vec![
            c((theta / 2.0).cos(), 0.0),
            num_complex::Complex64::from_polar((theta / 2.0).sin(), phi),
        ]);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> Result<num_complex::Complex64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|⟨self|other⟩|²`
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn projector(&self) -> CMatrix {
        ops::outer(&self.amps, &self.amps)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { m: self.projector() }
    }

    /// `U|self⟩`; `u` must be unitary.
    pub fn evolve(&self, u: &CMatrix) -> Result<Self> {
        check_dims(self.dim(), u.ncols())?;
        Self::normalized(u * &self.amps)
    }

    pub fn tensor(&self, other: &PureState) -> Self {
        Self { amps: self.amps.kronecker(&other.amps) }
    }

    /// Same state with the first nonzero amplitude made real and positive.
    pub fn canonical_phase(&self) -> Self {
        let lead = self.amps.iter().find(|z| z.norm() > 1e-12).copied().unwrap_or(ONE);
        let phase = lead / lead.norm();
        Self { amps: self.amps.map(|z| z / phase) }
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { left: m.nrows(), right: m.ncols() });
        }
        if m.nrows() < 2 {
            return Err(Error::InvalidDimension(m.nrows()));
        }
        let herm = ops::hermiticity_error(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = ops::trace(&m).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace(tr));
        }
        let (values, _) = ops::eigh(&m);
        let min = values.last().copied().unwrap_or(0.0);
        if min < -PSD_FLOOR {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { m: ops::hermitize(&m) })
    }

    /// Hermitizes and renormalizes the trace before validating. Trace drift
    /// beyond `max_drift` is an error.
    pub fn repaired(m: CMatrix, max_drift: f64) -> Result<Self> {
        let h = ops::hermitize(&m);
        let tr = ops::trace(&h).re;
        if (tr - 1.0).abs() > max_drift {
            return Err(Error::BadTrace(tr));
        }
        Self::new(h.unscale(tr))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self { m: ops::identity(dim).unscale(dim as f64) })
    }

    /// `Σ w_i |ψ_i⟩⟨ψ_i|`; weights must be nonnegative and sum to 1.
    pub fn mixture(weights: &[f64], states: &[PureState]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::InvalidArgument("mixture needs one weight per state".into()));
        }
        let dim = states[0].dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, s) in weights.iter().zip(states) {
            check_dims(dim, s.dim())?;
            if *w < 0.0 {
                return Err(Error::InvalidArgument(format!("negative weight {w}")));
            }
            m += s.projector().scale(*w);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        check_dims(self.dim(), psi.dim())?;
        let v = psi.amplitudes();
        Ok(v.dotc(&(&self.m * v)).re)
    }

    /// Eigenvalues (descending) and eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        ops::eigh(&self.m)
    }

    /// Number of eigenvalues above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.eigen().0.iter().filter(|&&v| v > threshold).count()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    pub fn sqrt(&self) -> CMatrix {
        ops::psd_sqrt(&self.m)
    }

    /// Largest entrywise distance.
    pub fn distance_max(&self, other: &DensityMatrix) -> f64 {
        ops::max_abs_diff(&self.m, &other.m)
    }

    /// Frobenius distance.
    pub fn distance_frobenius(&self, other: &DensityMatrix) -> f64 {
        (&self.m - &other.m).norm()
    }

    /// `UρU†`
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        check_dims(self.dim(), u.ncols())?;
        Self::repaired(u * &self.m * u.adjoint(), 1e-10)
    }

    /// Entrywise real part, as a real-entried symmetric matrix.
    pub fn real_part(&self) -> CMatrix {
        self.m.map(|z| c(z.re, 0.0))
    }
}

pub(crate) fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::DimensionMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}

/// Uhlmann fidelity `F(ρ,σ) = (tr√(√ρ σ √ρ))²`.
///
/// The trace norm `‖√ρ√σ‖₁` is evaluated through singular values, which keeps
/// the result accurate to roundoff when either argument is rank deficient.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    let product = rho.sqrt() * sigma.sqrt();
    let trace_norm: f64 = product.singular_values().iter().sum();
    Ok((trace_norm * trace_norm).clamp(0.0, 1.0))
}

/// Tensor-factor selector for two-qubit states. The control qubit is the
/// left factor: basis index `2·control + target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qubit {
    Control,
    Target,
}

/// Reduced state of one qubit of a two-qubit density matrix.
pub fn partial_trace(rho: &DensityMatrix, keep: Qubit) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::UnsupportedDimension { expected: 4, got: rho.dim() });
    }
    let m = rho.matrix();
    let mut out = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = ZERO;
            for k in 0..2 {
                acc += match keep {
                    Qubit::Control => m[(2 * i + k, 2 * j + k)],
                    Qubit::Target => m[(2 * k + i, 2 * k + j)],
                };
            }
            out[(i, j)] = acc;
        }
    }
    DensityMatrix::repaired(out, 1e-10)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let b = Self { x, y, z };
        if b.norm() > 1.0 + 1e-12 || !b.norm().is_finite() {
            return Err(Error::InvalidBloch(b.norm()));
        }
        Ok(b)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &BlochVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Transverse length `√(x² + y²)`.
    pub fn transverse(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Angle between the directions of two nonzero vectors.
    pub fn angle_to(&self, o: &BlochVector) -> f64 {
        (self.dot(o) / (self.norm() * o.norm())).clamp(-1.0, 1.0).acos()
    }
}

/// `ρ = ½(1 + xσ_x + yσ_y + zσ_z)` inverted.
pub fn bloch_from_qubit(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::UnsupportedDimension { expected: 2, got: rho.dim() });
    }
    let m = rho.matrix();
    Ok(BlochVector {
        x: 2.0 * m[(0, 1)].re,
        y: -2.0 * m[(0, 1)].im,
        z: (m[(0, 0)] - m[(1, 1)]).re,
    })
}

pub fn qubit_from_bloch(b: &BlochVector) -> Result<DensityMatrix> {
    if b.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidBloch(b.norm()));
    }
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[c((1.0 + b.z) / 2.0, 0.0), c(b.x / 2.0, -b.y / 2.0), c(b.x / 2.0, b.y / 2.0), c((1.0 - b.z) / 2.0, 0.0)],
    );
    Ok(DensityMatrix { m })
}

/// Bloch vector of a pure qubit.
pub fn bloch_of(psi: &PureState) -> Result<BlochVector> {
    bloch_from_qubit(&psi.density())
}

/// Haar-random pure state: normalized vector of i.i.d. complex Gaussians.
pub fn haar_random_pure(dim: usize, rng: &mut Rng) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    loop {
        let v = CVector::from_fn(dim, |_, _| rng.complex_normal());
        if v.norm() > 1e-150 {
            return PureState::normalized(v);
        }
    }
}

/// Haar-random unitary via QR of a Ginibre matrix with the phases of `R`'s
/// diagonal absorbed into `Q`.
pub fn haar_unitary(dim: usize, rng: &mut Rng) -> Result<CMatrix> {
    if dim < 1 {
        return Err(Error::InvalidDimension(dim));
    }
    let g = CMatrix::from_fn(dim, dim, |_, _| rng.complex_normal());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Random full-rank density matrix from the Hilbert–Schmidt ensemble.
pub fn random_density(dim: usize, rng: &mut Rng) -> Result<DensityMatrix> {
    random_density_with_rank(dim, dim, rng)
}

/// `G G† / tr(G G†)` with `G` a `dim × rank` Ginibre matrix.
pub fn random_density_with_rank(dim: usize, rank: usize, rng: &mut Rng) -> Result<DensityMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if rank == 0 || rank > dim {
        return Err(Error::InvalidArgument(format!("rank {rank} not in 1..={dim}")));
    }
    let g = CMatrix::from_fn(dim, rank, |_, _| rng.complex_normal());
    let m = &g * g.adjoint();
    let tr = ops::trace(&m).re;
    DensityMatrix::new(ops::hermitize(&m.unscale(tr)))
}
