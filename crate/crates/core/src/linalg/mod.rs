//! State types, sampling, and fidelity primitives.

pub mod ops;
pub mod rng;
pub mod state;

pub use ops::{rotation_gate, Axis, CMatrix, CVector};
pub use rng::Rng;
pub use state::{
    bloch_from_qubit, bloch_of, fidelity, haar_random_pure, haar_unitary, partial_trace, qubit_from_bloch,
    random_density, random_density_with_rank, BlochVector, DensityMatrix, PureState, Qubit,
};
