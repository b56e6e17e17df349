//! Schrödinger–HJW ensembles and their semi-unitary parameterization.

use num_complex::Complex64;
use serde::ser::{Serialize, Serializer};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::{vector_to_pairs, ComplexPair};
use crate::linalg::ops::{self, c, CMatrix};
use crate::linalg::{DensityMatrix, PureState};

pub const RANK_THRESHOLD: f64 = 1e-12;
/// Members lighter than this are dropped from ensembles.
pub const MIN_WEIGHT: f64 = 1e-14;
const SEMI_UNITARY_TOL: f64 = 1e-10;
const QR_PIVOT_FLOOR: f64 = 1e-12;
const QR_PERTURBATION: f64 = 1e-10;

/// Weighted pure-state decomposition of `source`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub weights: Vec<f64>,
    pub states: Vec<PureState>,
    pub source: DensityMatrix,
}

impl Ensemble {
    pub fn trivial(phi: PureState) -> Self {
        let source = phi.density();
        Self { weights: vec![1.0], states: vec![phi], source }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ p_i |φ_i⟩⟨φ_i|`
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.source.dim();
        let mut out = CMatrix::zeros(d, d);
        for (p, phi) in self.weights.iter().zip(&self.states) {
            out += phi.projector().scale(*p);
        }
        out
    }

    pub fn reconstruction_error(&self) -> f64 {
        ops::max_abs_diff(&self.reconstruct(), self.source.matrix())
    }

    /// Rows of (weight, amplitudes), one per member.
    pub fn table(&self) -> EnsembleTable {
        EnsembleTable {
            dim: self.source.dim(),
            rows: self
                .weights
                .iter()
                .zip(&self.states)
                .map(|(&p, phi)| EnsembleRow { p, amplitudes: vector_to_pairs(phi.amplitudes()) })
                .collect(),
        }
    }
}

impl Serialize for Ensemble {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.table().serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct EnsembleTable {
    pub dim: usize,
    pub rows: Vec<EnsembleRow>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct EnsembleRow {
    pub p: f64,
    pub amplitudes: Vec<ComplexPair>,
}

/// Eigendecomposition data reused across many HJW evaluations of one state.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// `D×r` matrix with columns `√λ_j |v_j⟩`.
    pub scaled: CMatrix,
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn of(rho: &DensityMatrix) -> Self {
        let (values, vectors) = rho.eigen();
        let r = values.iter().filter(|&&v| v > RANK_THRESHOLD).count().max(1);
        let mut scaled = vectors.columns(0, r).into_owned();
        for j in 0..r {
            let s = values[j].max(0.0).sqrt();
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= s;
            }
        }
        Self { scaled, eigenvalues: values[..r].to_vec() }
    }

    pub fn rank(&self) -> usize {
        self.scaled.ncols()
    }

    /// Unnormalized members `ζ_i = Σ_j u_ij √λ_j|v_j⟩` as columns.
    pub fn members(&self, u: &CMatrix) -> CMatrix {
        &self.scaled * u.transpose()
    }
}

/// Ensemble `{p_i, φ_i}` generated from `rho` by the `k×r` semi-unitary `u`.
pub fn hjw_decomposition(rho: &DensityMatrix, u: &CMatrix) -> Result<Ensemble> {
    let spec = Spectrum::of(rho);
    let r = spec.rank();
    if u.ncols() != r {
        return Err(Error::InvalidArgument(format!("mixing matrix has {} columns, state rank is {r}", u.ncols())));
    }
    if u.nrows() < r {
        return Err(Error::InvalidArgument(format!("need k ≥ r = {r}, got k = {}", u.nrows())));
    }
    let err = ops::unitarity_error(u);
    if err > SEMI_UNITARY_TOL {
        return Err(Error::InvalidArgument(format!("mixing matrix is not semi-unitary (error {err:.3e})")));
    }
    Ok(ensemble_from_members(rho, &spec.members(u)))
}

pub(crate) fn ensemble_from_members(rho: &DensityMatrix, z: &CMatrix) -> Ensemble {
    let mut weights = Vec::new();
    let mut states = Vec::new();
    for col in z.column_iter() {
        let p = col.norm_squared();
        if p < MIN_WEIGHT {
            continue;
        }
        weights.push(p);
        states.push(PureState::normalized(col.into_owned()).expect("nonzero member"));
    }
    Ensemble { weights, states, source: rho.clone() }
}

/// Builds a `k×r` semi-unitary from `2kr` reals.
///
/// `x` holds interleaved `(re, im)` pairs of a row-major `k×r` matrix `X`;
/// the result is the thin `Q` of `X = QR` with the phases of `Q`'s columns
/// fixed so that `R` has a nonnegative real diagonal. A rank-deficient `X`
/// is nudged once by `1e-10·[I; 0]` before giving up.
pub fn semi_unitary_from_vector(x: &[f64], k: usize, r: usize) -> Result<CMatrix> {
    if r == 0 || k < r {
        return Err(Error::InvalidArgument(format!("need 1 ≤ r ≤ k, got k = {k}, r = {r}")));
    }
    if x.len() != 2 * k * r {
        return Err(Error::InvalidArgument(format!("expected {} reals, got {}", 2 * k * r, x.len())));
    }
    let mut m = CMatrix::from_fn(k, r, |i, j| {
        let at = 2 * (i * r + j);
        c(x[at], x[at + 1])
    });
    if let Some(q) = phase_fixed_q(&m) {
        return Ok(q);
    }
    for j in 0..r {
        m[(j, j)] += c(QR_PERTURBATION, 0.0);
    }
    phase_fixed_q(&m).ok_or(Error::Singular(f64::INFINITY))
}

fn phase_fixed_q(m: &CMatrix) -> Option<CMatrix> {
    let qr = m.clone().qr();
    let rr = qr.r();
    let mut q = qr.q();
    for j in 0..m.ncols() {
        let d = rr[(j, j)];
        let n = d.norm();
        if !(n >= QR_PIVOT_FLOOR) {
            return None;
        }
        let phase: Complex64 = d / n;
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    Some(q)
}

/// The vector encoding `[I_r; 0]`, which maps to the eigen-ensemble.
pub fn identity_encoding(k: usize, r: usize) -> Vec<f64> {
    let mut x = vec![0.0; 2 * k * r];
    for j in 0..r {
        x[2 * (j * r + j)] = 1.0;
    }
    x
}

/// Eigen-ensemble of `rho` (members with weight above [`MIN_WEIGHT`]).
pub fn eigen_ensemble(rho: &DensityMatrix) -> Ensemble {
    let spec = Spectrum::of(rho);
    ensemble_from_members(rho, &spec.scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density_with_rank, Rng};

    fn random_x(k: usize, r: usize, rng: &mut Rng) -> Vec<f64> {
        (0..2 * k * r).map(|_| rng.uniform_in(-1.0, 1.0)).collect()
    }

    #[test]
    fn identity_mixing_gives_eigen_ensemble() {
        let mut rng = Rng::new(1);
        let rho = random_density_with_rank(4, 3, &mut rng).unwrap();
        let u = semi_unitary_from_vector(&identity_encoding(3, 3), 3, 3).unwrap();
        assert!(ops::max_abs_diff(&u, &ops::identity(3)) < 1e-15);
        let ens = hjw_decomposition(&rho, &u).unwrap();
        let (vals, _) = rho.eigen();
        for (p, v) in ens.weights.iter().zip(&vals) {
            assert!((p - v).abs() < 1e-12);
        }
        assert!(ens.reconstruction_error() < 1e-12);
    }

    #[test]
    fn random_mixing_reconstructs() {
        let mut rng = Rng::new(2);
        for k in [3, 5, 16] {
            for _ in 0..30 {
                let rho = random_density_with_rank(4, 3, &mut rng).unwrap();
                let u = semi_unitary_from_vector(&random_x(k, 3, &mut rng), k, 3).unwrap();
                let ens = hjw_decomposition(&rho, &u).unwrap();
                assert!(ens.len() <= k);
                assert!((ens.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                assert!(ens.reconstruction_error() < 1e-9);
            }
        }
    }

    #[test]
    fn semi_unitary_property() {
        let mut rng = Rng::new(3);
        for _ in 0..1000 {
            let k = 2 + rng.index(15);
            let r = 1 + rng.index(k.min(4));
            let u = semi_unitary_from_vector(&random_x(k, r, &mut rng), k, r).unwrap();
            assert_eq!((u.nrows(), u.ncols()), (k, r));
            assert!(ops::unitarity_error(&u) < 1e-10);
        }
    }

    #[test]
    fn semi_unitary_is_deterministic_and_phase_fixed() {
        let mut rng = Rng::new(4);
        let x = random_x(6, 2, &mut rng);
        let u = semi_unitary_from_vector(&x, 6, 2).unwrap();
        assert_eq!(u, semi_unitary_from_vector(&x, 6, 2).unwrap());
        // Q†X is upper triangular with a nonnegative real diagonal.
        let m = CMatrix::from_fn(6, 2, |i, j| c(x[2 * (i * 2 + j)], x[2 * (i * 2 + j) + 1]));
        let r = u.adjoint() * m;
        for j in 0..2 {
            assert!(r[(j, j)].im.abs() < 1e-12 && r[(j, j)].re > 0.0);
        }
        assert!(r[(1, 0)].norm() < 1e-12);
    }

    #[test]
    fn semi_unitary_rejects_bad_input() {
        assert!(semi_unitary_from_vector(&[0.0; 7], 2, 2).is_err());
        assert!(semi_unitary_from_vector(&[0.0; 8], 1, 2).is_err());
        // All zeros is rescued by the perturbation.
        let u = semi_unitary_from_vector(&[0.0; 8], 2, 2).unwrap();
        assert!(ops::unitarity_error(&u) < 1e-10);
        // Duplicate columns are rescued too.
        let dup = [1.0, 0.0, 1.0, 0.0, 0.5, 0.0, 0.5, 0.0];
        assert!(ops::unitarity_error(&semi_unitary_from_vector(&dup, 2, 2).unwrap()) < 1e-10);
    }

    #[test]
    fn hjw_rejects_bad_mixing() {
        let mut rng = Rng::new(5);
        let rho = random_density_with_rank(4, 3, &mut rng).unwrap();
        assert!(hjw_decomposition(&rho, &ops::identity(2)).is_err());
        let not_unitary = ops::identity(3).scale(2.0);
        assert!(hjw_decomposition(&rho, &not_unitary).is_err());
    }

    #[test]
    fn table_layout() {
        let mut rng = Rng::new(6);
        let rho = random_density_with_rank(4, 4, &mut rng).unwrap();
        let u = semi_unitary_from_vector(&random_x(16, 4, &mut rng), 16, 4).unwrap();
        let ens = hjw_decomposition(&rho, &u).unwrap();
        let v: serde_json::Value = serde_json::to_value(&ens).unwrap();
        assert_eq!(v["dim"], 4);
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 16);
        assert_eq!(rows[0]["amplitudes"].as_array().unwrap().len(), 4);
    }
}
