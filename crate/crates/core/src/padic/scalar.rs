use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use super::modulus::Modulus;
use crate::error::{Error, Result};

/// A `p`-adic valuation truncated at the working precision.
///
/// `capped` means the element is indistinguishable from zero modulo `p^N`,
/// so `value == N` is only a lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Valuation {
    pub value: u32,
    pub capped: bool,
}

impl Valuation {
    pub fn new(value: u32, precision: u32) -> Self {
        Valuation {
            value: value.min(precision),
            capped: value >= precision,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.capped {
            write!(f, ">={}", self.value)
        } else {
            write!(f, "{}", self.value)
        }
    }
}

/// A residue modulo `p^N`.
///
/// The arithmetic operators panic when the operands carry different moduli;
/// use the `checked_*` methods to get an error instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    residue: u64,
    modulus: Modulus,
}

impl PadicScalar {
    pub fn new(modulus: Modulus, value: i128) -> Self {
        PadicScalar {
            residue: modulus.reduce_signed(value),
            modulus,
        }
    }

    /// Builds a scalar from a residue that must already lie in `[0, p^N)`.
    pub fn from_residue(modulus: Modulus, residue: u64) -> Result<Self> {
        if residue >= modulus.value() {
            return Err(Error::OutOfRange {
                value: residue as i128,
                modulus: modulus.value(),
            });
        }
        Ok(PadicScalar { residue, modulus })
    }

    pub(crate) fn raw(modulus: Modulus, residue: u64) -> Self {
        debug_assert!(residue < modulus.value());
        PadicScalar { residue, modulus }
    }

    pub fn zero(modulus: Modulus) -> Self {
        Self::raw(modulus, 0)
    }

    pub fn one(modulus: Modulus) -> Self {
        Self::raw(modulus, 1 % modulus.value())
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.residue == 0
    }

    pub fn is_unit(&self) -> bool {
        self.modulus.is_unit(self.residue)
    }

    pub fn valuation(&self) -> Valuation {
        Valuation::new(self.modulus.val(self.residue), self.modulus.precision())
    }

    pub fn inverse(&self) -> Result<Self> {
        self.modulus
            .inv(self.residue)
            .map(|r| Self::raw(self.modulus, r))
            .ok_or(Error::NonUnit {
                valuation: self.modulus.val(self.residue),
            })
    }

    pub fn pow(&self, exp: u64) -> Self {
        Self::raw(self.modulus, self.modulus.pow(self.residue, exp))
    }

    /// Reduction to a lower precision `m <= N`.
    pub fn reduce_to(&self, m: u32) -> Result<Self> {
        if m > self.modulus.precision() {
            return Err(Error::PrecisionExceeded {
                requested: m,
                precision: self.modulus.precision(),
            });
        }
        let target = self.modulus.with_precision(m)?;
        Ok(Self::raw(target, target.reduce(self.residue)))
    }

    fn same_modulus(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                left: self.modulus.to_string(),
                right: other.modulus.to_string(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        Ok(Self::raw(
            self.modulus,
            self.modulus.add(self.residue, other.residue),
        ))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        Ok(Self::raw(
            self.modulus,
            self.modulus.sub(self.residue, other.residue),
        ))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        Ok(Self::raw(
            self.modulus,
            self.modulus.mul(self.residue, other.residue),
        ))
    }
}

impl Add for PadicScalar {
    type Output = PadicScalar;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(&rhs).expect("mixed moduli in addition")
    }
}

impl Sub for PadicScalar {
    type Output = PadicScalar;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(&rhs).expect("mixed moduli in subtraction")
    }
}

impl Mul for PadicScalar {
    type Output = PadicScalar;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(&rhs).expect("mixed moduli in multiplication")
    }
}

impl Neg for PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> Self {
        Self::raw(self.modulus, self.modulus.neg(self.residue))
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.residue, self.modulus)
    }
}
