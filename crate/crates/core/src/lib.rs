//! Exact finite-precision machinery for congruence subgroups of `SL(2, Z_p)`
//! and their Lie lattices.
//!
//! Everything works with residues modulo `p^N`: matrices over `Z/p^N`, the
//! exponential and logarithm maps, lattices in `sl(2)` with their elementary
//! divisors, the approximation of Lie subalgebras by isolated ones, the
//! mod-`p` subgroup/subalgebra correspondence, counting of fixed points and
//! commutator volumes, and brute-force counts of polynomial congruences.

pub mod approx;
pub mod congcount;
pub mod error;
pub mod explog;
pub mod lattice;
pub mod nori;
pub mod padic;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod volumes;

pub use error::{Error, Result};
pub use padic::{MatP, Modulus, PadicScalar};
