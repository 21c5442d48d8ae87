use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted: residues must stay representable as `i64` so that
/// signed literals and negation never overflow.
const MAX_MODULUS: u64 = 1 << 62;

/// The pair `(p, N)` describing the residue ring `Z/p^N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ModulusRepr", into = "ModulusRepr")]
pub struct Modulus {
    p: u64,
    precision: u32,
    pn: u64,
}

#[derive(Serialize, Deserialize)]
struct ModulusRepr {
    p: u64,
    #[serde(rename = "N")]
    precision: u32,
}

impl TryFrom<ModulusRepr> for Modulus {
    type Error = Error;
    fn try_from(r: ModulusRepr) -> Result<Self> {
        Modulus::new(r.p, r.precision)
    }
}

impl From<Modulus> for ModulusRepr {
    fn from(m: Modulus) -> Self {
        ModulusRepr {
            p: m.p,
            precision: m.precision,
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Modulus {
    pub fn new(p: u64, precision: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if precision == 0 {
            return Err(Error::ZeroPrecision);
        }
        let pn = p
            .checked_pow(precision)
            .filter(|&v| v <= MAX_MODULUS)
            .ok_or(Error::PrecisionOverflow { p, precision })?;
        Ok(Modulus { p, precision, pn })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// The exponent `N`.
    #[inline]
    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// The integer `p^N`.
    #[inline]
    pub fn value(&self) -> u64 {
        self.pn
    }

    /// Same prime at another precision.
    pub fn with_precision(&self, precision: u32) -> Result<Self> {
        Modulus::new(self.p, precision)
    }

    /// `p^k` for `k <= N`.
    #[inline]
    pub fn p_pow(&self, k: u32) -> u64 {
        debug_assert!(k <= self.precision);
        self.p.pow(k)
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.pn
    }

    #[inline]
    pub fn reduce_signed(&self, x: i128) -> u64 {
        x.rem_euclid(self.pn as i128) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.pn {
            s - self.pn
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.pn - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.pn - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.pn as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.pn;
        base %= self.pn;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// `v_p(x)` capped at `N`.
    #[inline]
    pub fn val(&self, x: u64) -> u32 {
        let mut x = x % self.pn;
        if x == 0 {
            return self.precision;
        }
        let mut v = 0;
        while x % self.p == 0 {
            x /= self.p;
            v += 1;
        }
        v
    }

    #[inline]
    pub fn is_unit(&self, x: u64) -> bool {
        x % self.p != 0
    }

    /// Inverse of a unit, `None` for non-units.
    pub fn inv(&self, x: u64) -> Option<u64> {
        if !self.is_unit(x) {
            return None;
        }
        let (mut r0, mut r1) = (self.pn as i128, (x % self.pn) as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Some(self.reduce_signed(t0))
    }

    /// Writes a nonzero residue as `p^v * u` and returns `(v, u)` with `u` a unit,
    /// `u` taken as the integer quotient (well defined modulo `p^(N-v)`).
    pub fn split(&self, x: u64) -> (u32, u64) {
        let v = self.val(x);
        if v >= self.precision {
            return (self.precision, 0);
        }
        (v, (x % self.pn) / self.p.pow(v))
    }

    /// Exact division by `p^k`. The result is meaningful modulo `p^(N-k)`; the
    /// caller must already know that `x` is divisible by `p^k`.
    pub fn div_p_pow(&self, x: u64, k: u32) -> Result<u64> {
        if self.val(x) < k {
            return Err(Error::DomainViolation(format!(
                "{x} is not divisible by {}^{k} modulo {}",
                self.p, self.pn
            )));
        }
        Ok((x % self.pn) / self.p.pow(k))
    }

    /// Least nonnegative representative of a signed integer, refusing values
    /// outside `(-p^N, p^N)` when `strict` is set.
    pub fn residue_of(&self, x: i128, strict: bool) -> Result<u64> {
        if strict && (x < 0 || x >= self.pn as i128) {
            return Err(Error::OutOfRange {
                value: x,
                modulus: self.pn,
            });
        }
        Ok(self.reduce_signed(x))
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.p, self.precision)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_composites_and_overflow() {
        assert_eq!(Modulus::new(9, 2), Err(Error::NotPrime(9)));
        assert_eq!(Modulus::new(3, 0), Err(Error::ZeroPrecision));
        assert!(matches!(
            Modulus::new(3, 40),
            Err(Error::PrecisionOverflow { .. })
        ));
        assert!(Modulus::new(2, 62).is_ok());
        assert!(Modulus::new(2, 63).is_err());
    }

    #[test]
    fn inverse_and_split() {
        let m = Modulus::new(3, 2).unwrap();
        assert_eq!(m.inv(2), Some(5));
        assert_eq!(m.inv(3), None);
        let m = Modulus::new(5, 4).unwrap();
        assert_eq!(m.split(35), (1, 7));
        assert_eq!(m.split(0), (4, 0));
    }
}
