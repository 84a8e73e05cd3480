//! Mean-field plus RPA ground-state entanglement for finite spin arrays.
//!
//! The pipeline is: [`model`] defines the Hamiltonian, [`meanfield`] finds the
//! product-state minimum, [`rpa`] bosonizes the fluctuations and diagonalizes
//! them, [`gaussian`] turns the vacuum contractions into subsystem entropies and
//! negativities, and [`parity`] restores the broken parity symmetry.
//! [`analytic`] holds closed forms and [`exact`] the diagonalization oracles.

pub mod analytic;
pub mod error;
pub mod exact;
pub mod gaussian;
pub mod linalg;
pub mod meanfield;
pub mod model;
pub mod parity;
pub mod rpa;

pub use error::{Error, Result};
