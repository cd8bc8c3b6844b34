//! Random walks in i.i.d. nonnegative potentials on `Z^d`.
//!
//! The crate evaluates the weak-disorder rate integral and its splittings
//! ([`theory`]), simulates and solves simple-random-walk problems
//! ([`lattice_walk`]), samples potential fields ([`environment`]), estimates
//! annealed point-to-hyperplane weights by Feynman–Kac Monte Carlo
//! ([`fk_mc`]), solves Anderson Hamiltonians for Green functions
//! ([`green`]), and provides brute-force references ([`oracle`]). The
//! [`acceptance`] battery ties these together into pass/fail checks.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod environment;
pub mod error;
pub mod fk_mc;
pub mod green;
pub mod lattice_walk;
pub mod numerics;
pub mod oracle;
pub mod par;
pub mod theory;

pub use error::{Error, Result};

/// Version of this crate, recorded in every output row.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
