//! JSON encodings shared by channels, states, and reports.
//!
//! Complex matrices are stored row-major as `[re, im]` pairs. `serde_json`
//! writes the shortest representation that round-trips each `f64`, so
//! encode/decode is bit-exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ops::c;
use crate::linalg::{CMatrix, CVector, DensityMatrix};

pub type ComplexPair = [f64; 2];

pub fn matrix_to_pairs(m: &CMatrix) -> Vec<ComplexPair> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

pub fn matrix_from_pairs(rows: usize, cols: usize, pairs: &[ComplexPair]) -> Result<CMatrix> {
    if pairs.len() != rows * cols {
        return Err(Error::Parse(format!("expected {} entries, found {}", rows * cols, pairs.len())));
    }
    Ok(CMatrix::from_row_iterator(rows, cols, pairs.iter().map(|p| c(p[0], p[1]))))
}

pub fn vector_to_pairs(v: &CVector) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// On-disk density matrix: `{"dim": D, "entries": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFile {
    pub dim: usize,
    pub entries: Vec<ComplexPair>,
}

impl DensityFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        Self { dim: rho.dim(), entries: matrix_to_pairs(rho.matrix()) }
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(matrix_from_pairs(self.dim, self.dim, &self.entries)?)
    }
}

pub fn parse_density(json: &str) -> Result<DensityMatrix> {
    let file: DensityFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_state()
}

pub fn density_to_json(rho: &DensityMatrix) -> String {
    serde_json::to_string_pretty(&DensityFile::from_state(rho)).expect("density serialization")
}
