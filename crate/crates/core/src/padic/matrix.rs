use std::fmt;

use serde::{Deserialize, Serialize};

use super::modulus::Modulus;
use super::scalar::{PadicScalar, Valuation};
use crate::error::{Error, Result};

/// Matrix size of the ambient representation (`G = SL(2)`).
pub const N0: usize = 2;

/// Row-major entry storage, used as a hashing key by the closure routines.
pub type MatKey = [u64; N0 * N0];

/// An `N0 x N0` matrix over `Z/p^N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatP {
    entries: MatKey,
    modulus: Modulus,
}

/// JSON literal `{"p":3,"N":4,"mat":[[1,3],[0,1]]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatLiteral {
    pub p: u64,
    #[serde(rename = "N")]
    pub precision: u32,
    pub mat: Vec<Vec<i64>>,
}

impl MatP {
    /// Builds a matrix from signed integer rows, reducing modulo `p^N`.
    pub fn new(modulus: Modulus, rows: [[i64; N0]; N0]) -> Self {
        let mut entries = [0; N0 * N0];
        for i in 0..N0 {
            for j in 0..N0 {
                entries[i * N0 + j] = modulus.reduce_signed(rows[i][j] as i128);
            }
        }
        MatP { entries, modulus }
    }

    /// Builds a matrix from residues that are already reduced.
    pub fn from_key(modulus: Modulus, entries: MatKey) -> Self {
        debug_assert!(entries.iter().all(|&e| e < modulus.value()));
        MatP { entries, modulus }
    }

    pub fn from_scalars(rows: [[PadicScalar; N0]; N0]) -> Result<Self> {
        let modulus = rows[0][0].modulus();
        let mut entries = [0; N0 * N0];
        for i in 0..N0 {
            for j in 0..N0 {
                if rows[i][j].modulus() != modulus {
                    return Err(Error::ModulusMismatch {
                        left: modulus.to_string(),
                        right: rows[i][j].modulus().to_string(),
                    });
                }
                entries[i * N0 + j] = rows[i][j].residue();
            }
        }
        Ok(MatP { entries, modulus })
    }

    pub fn from_literal(lit: &MatLiteral) -> Result<Self> {
        let modulus = Modulus::new(lit.p, lit.precision)?;
        if lit.mat.len() != N0 || lit.mat.iter().any(|r| r.len() != N0) {
            return Err(Error::Parse(format!("matrix literal must be {N0}x{N0}")));
        }
        let mut entries = [0; N0 * N0];
        for i in 0..N0 {
            for j in 0..N0 {
                entries[i * N0 + j] = modulus.residue_of(lit.mat[i][j] as i128, true)?;
            }
        }
        Ok(MatP { entries, modulus })
    }

    pub fn to_literal(&self) -> MatLiteral {
        MatLiteral {
            p: self.modulus.p(),
            precision: self.modulus.precision(),
            mat: (0..N0)
                .map(|i| (0..N0).map(|j| self.get(i, j) as i64).collect())
                .collect(),
        }
    }

    pub fn identity(modulus: Modulus) -> Self {
        let mut entries = [0; N0 * N0];
        for i in 0..N0 {
            entries[i * N0 + i] = 1 % modulus.value();
        }
        MatP { entries, modulus }
    }

    pub fn zero(modulus: Modulus) -> Self {
        MatP {
            entries: [0; N0 * N0],
            modulus,
        }
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn key(&self) -> MatKey {
        self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * N0 + j]
    }

    pub fn entry(&self, i: usize, j: usize) -> PadicScalar {
        PadicScalar::raw(self.modulus, self.get(i, j))
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.entries[i * N0 + j] = self.modulus.reduce(v);
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.modulus, other.modulus, "mixed moduli in matrix arithmetic");
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        let m = &self.modulus;
        let mut entries = [0; N0 * N0];
        for i in 0..N0 {
            for j in 0..N0 {
                let mut acc: u128 = 0;
                for k in 0..N0 {
                    acc += self.get(i, k) as u128 * other.get(k, j) as u128;
                }
                entries[i * N0 + j] = (acc % m.value() as u128) as u64;
            }
        }
        MatP {
            entries,
            modulus: self.modulus,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        let mut out = *self;
        for (o, b) in out.entries.iter_mut().zip(other.entries.iter()) {
            *o = self.modulus.add(*o, *b);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check(other);
        let mut out = *self;
        for (o, b) in out.entries.iter_mut().zip(other.entries.iter()) {
            *o = self.modulus.sub(*o, *b);
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = *self;
        for o in out.entries.iter_mut() {
            *o = self.modulus.neg(*o);
        }
        out
    }

    pub fn scale(&self, s: u64) -> Self {
        let mut out = *self;
        for o in out.entries.iter_mut() {
            *o = self.modulus.mul(*o, s);
        }
        out
    }

    pub fn pow(&self, mut exp: u64) -> Self {
        let mut acc = MatP::identity(self.modulus);
        let mut base = *self;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            exp >>= 1;
        }
        acc
    }

    pub fn det(&self) -> u64 {
        let m = &self.modulus;
        m.sub(
            m.mul(self.get(0, 0), self.get(1, 1)),
            m.mul(self.get(0, 1), self.get(1, 0)),
        )
    }

    pub fn trace(&self) -> u64 {
        (0..N0).fold(0, |acc, i| self.modulus.add(acc, self.get(i, i)))
    }

    /// `min v_p` over the entries, capped at `N`.
    pub fn min_valuation(&self) -> u32 {
        self.entries
            .iter()
            .map(|&e| self.modulus.val(e))
            .min()
            .unwrap_or(self.modulus.precision())
    }

    pub fn is_identity(&self) -> bool {
        *self == MatP::identity(self.modulus)
    }

    /// Inverse via the adjugate; fails with `NonUnit` when `p | det`.
    pub fn inverse(&self) -> Result<Self> {
        let m = &self.modulus;
        let det = self.det();
        let det_inv = m.inv(det).ok_or(Error::NonUnit {
            valuation: m.val(det),
        })?;
        let mut out = MatP::zero(self.modulus);
        out.set(0, 0, m.mul(self.get(1, 1), det_inv));
        out.set(1, 1, m.mul(self.get(0, 0), det_inv));
        out.set(0, 1, m.mul(m.neg(self.get(0, 1)), det_inv));
        out.set(1, 0, m.mul(m.neg(self.get(1, 0)), det_inv));
        Ok(out)
    }

    /// Reduction to precision `m <= N`.
    pub fn reduce_to(&self, m: u32) -> Result<Self> {
        if m > self.modulus.precision() {
            return Err(Error::PrecisionExceeded {
                requested: m,
                precision: self.modulus.precision(),
            });
        }
        let target = self.modulus.with_precision(m)?;
        Ok(self.lift_to(target))
    }

    /// Re-reads the residues in another modulus of the same prime. Going up in
    /// precision this is the canonical (least nonnegative) lift.
    pub fn lift_to(&self, target: Modulus) -> Self {
        debug_assert_eq!(target.p(), self.modulus.p());
        let mut entries = self.entries;
        for e in entries.iter_mut() {
            *e = target.reduce(*e);
        }
        MatP {
            entries,
            modulus: target,
        }
    }

    /// True iff every entry of `g - 1` has valuation at least `m`.
    pub fn in_principal_congruence(&self, m: u32) -> Result<bool> {
        let n = self.modulus.precision();
        if m > n {
            return Err(Error::PrecisionExceeded {
                requested: m,
                precision: n,
            });
        }
        Ok(self.sub(&MatP::identity(self.modulus)).min_valuation() >= m)
    }

    /// `g^p == 1 (mod p)`.
    pub fn residually_unipotent(&self) -> bool {
        let bar = self.lift_to(self.modulus.with_precision(1).expect("precision 1"));
        bar.pow(self.modulus.p()).is_identity()
    }

    /// `x^N0 == 0 (mod p)`, equivalently `x^p == 0 (mod p)` for `p >= N0`.
    pub fn residually_nilpotent(&self) -> bool {
        let bar = self.lift_to(self.modulus.with_precision(1).expect("precision 1"));
        bar.pow(N0 as u64).min_valuation() >= 1
    }

    pub fn valuation_of_entry(&self, i: usize, j: usize) -> Valuation {
        self.entry(i, j).valuation()
    }
}

impl fmt::Display for MatP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..N0 {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..N0 {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "] mod {}", self.modulus)
    }
}
