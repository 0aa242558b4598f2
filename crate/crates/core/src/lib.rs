//! Exact-diagonalization toolkit for approximate ground-space projectors on
//! frustration-free spin chains.
//!
//! The crate builds small projector chains, diagonalizes them densely, and
//! certifies the operator inequalities behind the one-dimensional area law:
//! detectability-lemma shrinkage, Chebyshev dilution of window projectors,
//! overlap amplification, explicit entropy and tail bounds, coarse-graining,
//! counting arithmetic, parameter planning and MPS truncation.
//!
//! Every logarithm is base 2.

pub mod agsp;
pub mod artifact;
pub mod chebyshev;
pub mod combinatorics;
pub mod detectability;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod mps;
pub mod params;
pub mod rng;
pub mod schmidt;

pub use error::{Error, Result};
