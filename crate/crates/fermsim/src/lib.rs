//! Numerical toolkit for fermionic quantum theory on a finite number of
//! local fermionic modes.
//!
//! The crate is organised by subsystem:
//!
//! - [`fock`]: field operators, Fock vectors, parity and polynomial evaluation
//! - [`superselection`]: parity sectors, state/effect validity, dimension counting
//! - [`channels`]: Kraus maps, parity canonical form, fermionic partial trace, dilation
//! - [`jordan_wigner`]: symbolic Pauli images of field polynomials
//! - [`entanglement`]: concurrence, entanglement of formation, separability, LOCC translation
//! - [`circuit`] and [`compiler`]: gate model, simulation and mode-to-qubit compilation
//! - [`bk`]: Bravyi-Kitaev encoding with logarithmic mode extraction
//!
//! Modes are 1-based in the Fock-space API (`1..=n`) and 0-based as circuit
//! wires. Basis states are ordered big-endian: mode 1 is the most significant bit.

pub mod bk;
pub mod channels;
pub mod circuit;
pub mod compiler;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod jordan_wigner;
pub mod json;
pub mod linalg;
pub mod random;
pub mod sparse;
pub mod superselection;

pub use error::{FermError, Result};
pub use linalg::{CMat, CVec, C64};

/// Default numerical tolerance for equality checks.
pub const DEFAULT_TOL: f64 = 1e-10;
