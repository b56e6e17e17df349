//! Numerical laboratory for quantum state texture and fixed-point resource
//! theories.
//!
//! * [`linalg`]: state types, Haar sampling, Uhlmann fidelity.
//! * [`measures`]: rugosity, the Σ functional, fidelity lower bounds, closed
//!   form qubit imaginarity and coherence.
//! * [`gateid`]: the randomized-input CNOT identification protocol.
//! * [`channels`]: fixed-point Kraus channels.
//! * [`roof`]: convex-roof evaluation by differential evolution.
//! * [`experiments`]: end-to-end reproductions.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod experiments;
pub mod gateid;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod roof;

pub use error::{Error, Result};
