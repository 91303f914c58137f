//! Desk-scale simulator and library for property testing of quantum
//! Hamiltonians from black-box time-evolution access.
//!
//! The crate provides:
//!
//! - exact symplectic arithmetic on n-qubit Pauli strings ([`pauli`]),
//! - the d+1 mutually unbiased stabilizer bases covering the Pauli group
//!   ([`mub`]),
//! - sparse Pauli-basis Hamiltonians, property sets and the random gadget
//!   ensembles used for hardness constructions ([`hamiltonian`]),
//! - a black-box time-evolution oracle with exact Born statistics
//!   ([`evolution`]),
//! - randomized-measurement property testers, including multi-property,
//!   ancilla-assisted and tolerant variants ([`testers`]),
//! - brute-force and Monte-Carlo verification oracles for Haar moments,
//!   Weingarten values, gadget statistics and short-time norm relations
//!   ([`oracles`]),
//! - a CLI harness for sweeps and machine-readable reports ([`harness`]).
//!
//! Everything is deterministic given explicit seeds; random streams are
//! counter-based so independent trials can run in parallel.

pub mod error;
pub mod linalg;
pub mod pauli;
mod gf2;
pub mod mub;
pub mod hamiltonian;
pub mod evolution;
pub mod testers;
pub mod oracles;
pub mod harness;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};

/// Largest qubit count for which dense 2^n-dimensional realizations are
/// built by default. Dense oracles are O(4^n) memory.
pub const DEFAULT_DENSE_QUBIT_CAP: usize = 10;
