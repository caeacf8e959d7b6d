//! Numerical simulator for two material qubits coupled to a single cavity
//! mode (two-qubit Tavis-Cummings model), with coherent-state postselection
//! by balanced homodyne detection.
//!
//! The crate is organised bottom-up:
//!
//! * [`hilbert`]: branch-keyed states of two qubits times a truncated Fock mode.
//! * [`hamiltonian`]: exact block-diagonal eigensystems and time evolution.
//! * [`analytic`]: large-photon-number closed forms (eigenvalue expansion,
//!   coherent-state field expansion, collapse/revival times, phase conditions).
//! * [`measurement`]: coherent projection, quadrature and Wigner
//!   representations, homodyne windows and an exact beam-splitter model.
//! * [`protocols`]: two-cavity Bell projection, teleportation and
//!   entanglement swapping pipelines.
//!
//! Units: `hbar = 1` and the reference coupling `g = 1`, so frequencies are in
//! units of `g` and times in units of `1/g`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod measurement;
pub mod protocols;
pub mod sampling;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;
