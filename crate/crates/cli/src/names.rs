//! Named example states and small argument parsers.

use std::path::Path;

use texlab::gateid::{failure_family, state_from_bloch, CnotBasis};
use texlab::io::parse_density;
use texlab::linalg::ops::{I, ONE};
use texlab::linalg::{qubit_from_bloch, BlochVector, CVector, DensityMatrix, PureState, Rng};
use texlab::measures::FreeSet;
use texlab::{Error, Result};

fn floats(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("{what}: expected {n} comma-separated numbers, got {s:?}")))?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what}: expected {n} finite numbers, got {s:?}")));
    }
    Ok(v)
}

fn bloch(s: &str) -> Result<[f64; 3]> {
    let v = floats(s, 3, "Bloch vector")?;
    Ok([v[0], v[1], v[2]])
}

/// `random`, `computational`, `THETA,PHI` or `failure:MU,NU2`.
pub fn basis(spec: &str, rng: &mut Rng) -> Result<CnotBasis> {
    match spec {
        "random" => Ok(CnotBasis::random(rng)),
        "computational" => Ok(CnotBasis::computational()),
        _ => match spec.strip_prefix("failure:") {
            Some(rest) => {
                let v = floats(rest, 2, "failure-family angles")?;
                Ok(failure_family(v[0], v[1])?.basis)
            }
            None => {
                let v = floats(spec, 2, "basis Bloch angles")?;
                CnotBasis::from_bloch_angles(v[0], v[1])
            }
        },
    }
}

/// Reference qubit for the identification protocol, relative to `basis`.
pub fn reference_qubit(name: &str, basis: &CnotBasis) -> Result<PureState> {
    let (c, cp) = (basis.c().amplitudes(), basis.c_prime().amplitudes());
    match name {
        "c" => Ok(basis.c().clone()),
        "c-prime" => Ok(basis.c_prime().clone()),
        "psi-plus" => PureState::normalized(c + cp * I),
        "psi-minus" => PureState::normalized(c - cp * I),
        "f1" => PureState::uniform(2),
        _ => match name.strip_prefix("bloch:") {
            Some(v) => state_from_bloch(bloch(v)?),
            None => Err(Error::InvalidArgument(format!(
                "unknown reference state {name:?} (expected c, c-prime, psi-plus, psi-minus, f1 or bloch:x,y,z)"
            ))),
        },
    }
}

/// A named state or a JSON density-matrix file.
///
/// Names: `f1` (uniform superposition in `dim`), `ket4` (`|4⟩` in D = 4),
/// `ket:i` (zero-based basis state in `dim`), `mixed` (maximally mixed),
/// `psi-plus` (`(|0⟩ + i|1⟩)/√2`), `bloch:x,y,z` (qubit).
pub fn density(name: &str, dim: usize) -> Result<DensityMatrix> {
    match name {
        "f1" => Ok(PureState::uniform(dim)?.density()),
        "ket4" => Ok(PureState::basis(4, 3)?.density()),
        "mixed" => DensityMatrix::maximally_mixed(dim),
        "psi-plus" => Ok(PureState::normalized(CVector::from_vec(vec![ONE, I]))?.density()),
        _ => {
            if let Some(v) = name.strip_prefix("bloch:") {
                let b = bloch(v)?;
                return qubit_from_bloch(&BlochVector::new(b[0], b[1], b[2])?);
            }
            if let Some(i) = name.strip_prefix("ket:") {
                let i = i.parse().map_err(|_| Error::InvalidArgument(format!("bad basis index in {name:?}")))?;
                return Ok(PureState::basis(dim, i)?.density());
            }
            let path = Path::new(name);
            if path.is_file() {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{name}: {e}")))?;
                return parse_density(&text);
            }
            Err(Error::InvalidArgument(format!("{name:?} is neither a named state nor a readable file")))
        }
    }
}

/// `single` (`{|0⟩}`), `texture` (`{f₁}`), `orth:m` (`{|0⟩…|m−1⟩}`),
/// `incoherent` or `real`.
pub fn free_set(spec: &str, dim: usize) -> Result<FreeSet> {
    match spec {
        "single" => Ok(FreeSet::single_pure(PureState::basis(dim, 0)?)),
        "texture" => Ok(FreeSet::single_pure(PureState::uniform(dim)?)),
        "incoherent" => FreeSet::incoherent(dim),
        "real" => FreeSet::real_states(dim),
        _ => match spec.strip_prefix("orth:") {
            Some(m) => {
                let m = m.parse().map_err(|_| Error::InvalidArgument(format!("bad free dimension in {spec:?}")))?;
                FreeSet::basis_subset(dim, m)
            }
            None => Err(Error::InvalidArgument(format!(
                "unknown free set {spec:?} (expected single, texture, orth:m, incoherent or real)"
            ))),
        },
    }
}
