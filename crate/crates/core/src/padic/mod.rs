//! Residues modulo `p^N`, `2 x 2` matrices over them, and finite subgroups of
//! `SL(2, Z/p^N)`.

mod group;
mod matrix;
mod modulus;
mod scalar;

pub use group::{
    for_each_sl2, group_level, level_of_group, principal_congruence_elements,
    principal_congruence_order, sl2_elements, sl2_order, Closure, FiniteGroup, LevelCertificate,
    Membership, DEFAULT_CLOSURE_CAP,
};
pub use matrix::{MatKey, MatLiteral, MatP, N0};
pub use modulus::{is_prime, Modulus};
pub use scalar::{PadicScalar, Valuation};
