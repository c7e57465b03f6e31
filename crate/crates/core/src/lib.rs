//! Computational toolkit for Fouvry–Iwaniec primes, i.e. primes of the form
//! `k² + l²` with `l` prime.
//!
//! The crate covers prime and weight enumeration, the local densities `Ξ(q,a)`,
//! the Buchstab function, beta-sieve weights and the majorant `Λ⁺`, the
//! quadratures behind the density constant `α⁺`, Gaussian-integer lattices,
//! exponential sums, and desk-scale verification of ternary representations
//! `x = p₁ + p₂ + p₃`.

pub mod arith;
pub mod buchstab;
pub mod constants;
pub mod error;
pub mod expsum;
pub mod gaussian;
pub mod lattice;
pub mod local;
pub mod primes;
pub mod quad;
pub mod sieve;
pub mod ternary;

pub use error::{FiError, Result};
