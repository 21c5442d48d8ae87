//! Volumes and fixed-point counts for `SL(2)`: the depth `λ_p`, the
//! commutator volume `φ_K(x)`, fixed points on `P^1(Z/p^n)`, fixed points of
//! `γ` on `Γ/Δ` for `Δ = Γ_0(M)` or `Γ(M)`, and the unipotent orbital volume.
//!
//! Volumes are exact fractions `count / |SL(2, Z/p^n)|`.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{self, DIM};
use crate::padic::{
    for_each_sl2, group_level, principal_congruence_elements, sl2_order, MatP, Membership, Modulus,
    Valuation,
};

pub type Rational = Ratio<u128>;

/// Default cap on `|SL(2, Z/p^n)|` for the brute-force volumes.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

fn check_budget(required: u128, cap: u128) -> Result<()> {
    if required > cap {
        return Err(Error::BudgetExceeded { required, cap });
    }
    Ok(())
}

/// `λ_p(x)`: least valuation of `(Ad(x) - 1) v` over `v ∈ {e, h, f}`, capped at `N`.
pub fn lambda_p(x: &MatP) -> Result<Valuation> {
    let md = x.modulus();
    let x_inv = x.inverse()?;
    let mut least = md.precision();
    for i in 0..DIM {
        let mut v = [0u64; DIM];
        v[i] = 1;
        let mv = lattice::to_matrix(md, &v);
        let moved = x.mul(&mv).mul(&x_inv).sub(&mv);
        least = least.min(moved.min_valuation());
    }
    Ok(Valuation::new(least, md.precision()))
}

/// Counts elements of `SL(2, Z/p^n)` satisfying `pred`, splitting on the
/// top-left entry.
fn count_sl2<P: Fn(&MatP) -> bool + Sync>(modulus: Modulus, pred: P) -> u128 {
    let q = modulus.value();
    (0..q)
        .into_par_iter()
        .map(|a| {
            let mut count = 0u128;
            for c in 0..q {
                if !modulus.is_unit(a) && !modulus.is_unit(c) {
                    continue;
                }
                let (b0, d0) = if modulus.is_unit(a) {
                    (0, modulus.inv(a).unwrap())
                } else {
                    (modulus.neg(modulus.inv(c).unwrap()), 0)
                };
                for t in 0..q {
                    let b = modulus.add(b0, modulus.mul(t, a));
                    let d = modulus.add(d0, modulus.mul(t, c));
                    if pred(&MatP::from_key(modulus, [a, b, c, d])) {
                        count += 1;
                    }
                }
            }
            count
        })
        .sum()
}

/// Exact count and normalized value of a volume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Volume {
    pub count: u128,
    pub total: u128,
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: Rational,
}

pub fn ser_ratio<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

impl Volume {
    fn new(count: u128, total: u128) -> Self {
        Volume {
            count,
            total,
            ratio: Rational::new(count, total),
        }
    }
}

/// `#{k ∈ SL(2, Z/p^n) : k x k^-1 x^-1 ∈ K} / |SL(2, Z/p^n)|`.
pub fn phi_brute<K: Membership + Sync>(k_group: &K, x: &MatP, cap: u128) -> Result<Volume> {
    let md = x.modulus();
    let total = sl2_order(md);
    check_budget(total, cap)?;
    let x_inv = x.inverse()?;
    let count = count_sl2(md, |k| {
        let k_inv = MatP::from_key(
            md,
            [k.get(1, 1), md.neg(k.get(0, 1)), md.neg(k.get(1, 0)), k.get(0, 0)],
        );
        k_group.contains(&k.mul(x).mul(&k_inv).mul(&x_inv))
    });
    Ok(Volume::new(count, total))
}

/// Membership in the image of `Γ_0(p^n)`: lower-left entry zero.
pub fn gamma0_member(g: &MatP) -> bool {
    g.get(1, 0) == 0
}

/// A point `[u : v]` of `P^1(Z/p^n)` with its first unit coordinate equal to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ProjectivePoint {
    pub u: u64,
    pub v: u64,
}

/// All points of `P^1(Z/p^n)`: `[1 : y]` and `[p t : 1]`.
pub fn projective_line(modulus: Modulus) -> Vec<ProjectivePoint> {
    let q = modulus.value();
    let p = modulus.p();
    let mut out: Vec<ProjectivePoint> = (0..q).map(|y| ProjectivePoint { u: 1, v: y }).collect();
    out.extend((0..q / p).map(|t| ProjectivePoint { u: t * p, v: 1 }));
    out
}

/// Number of points of `P^1(Z/p^n)` fixed by the Möbius action of `x`.
pub fn fixed_points_p1(x: &MatP) -> u64 {
    let md = x.modulus();
    let (a, b, c, d) = (x.get(0, 0), x.get(0, 1), x.get(1, 0), x.get(1, 1));
    projective_line(md)
        .iter()
        .filter(|pt| {
            // x (u, v) is proportional to (u, v) iff the 2x2 determinant vanishes
            let nu = md.add(md.mul(a, pt.u), md.mul(b, pt.v));
            let nv = md.add(md.mul(c, pt.u), md.mul(d, pt.v));
            md.sub(md.mul(nu, pt.v), md.mul(nv, pt.u)) == 0
        })
        .count() as u64
}

/// `|P^1(Z/p^n)| = p^n (1 + 1/p)`.
pub fn projective_line_size(modulus: Modulus) -> u64 {
    modulus.value() + modulus.value() / modulus.p()
}

/// Closed form for `φ_{Γ_0(p^n)}(x)` with `x = [[a, b], [0, d]]`:
/// `2 (1 + 1/p)^-1 p^{-(n - v(d-a))}` when `2 v(d - a) < n + r`, otherwise
/// `(1 + 1/p)^-1 p^{-⌈(n - r)/2⌉}`, where `r = min(v(d - a), v(b))`.
pub fn phi_gamma0(x: &MatP) -> Result<Rational> {
    let md = x.modulus();
    if md.p() == 2 {
        return Err(Error::UnsupportedPrime { p: 2, floor: 3 });
    }
    if x.get(1, 0) != 0 {
        return Err(Error::PreconditionViolation(format!("{x} is not upper triangular")));
    }
    let n = md.precision();
    let p = md.p() as u128;
    let vda = md.val(md.sub(x.get(1, 1), x.get(0, 0)));
    let r = vda.min(md.val(x.get(0, 1)));
    if r >= n {
        return Err(Error::PreconditionViolation(format!(
            "r = {r} is not below n = {n}"
        )));
    }
    let base = Rational::new(p, p + 1);
    Ok(if 2 * vda < n + r {
        base * Rational::new(2, p.pow(n - vda))
    } else {
        base * Rational::new(1, p.pow((n - r).div_ceil(2)))
    })
}

/// Factorization of a level `M = prod p^{n_p}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelFactorization(pub BTreeMap<u64, u32>);

impl LevelFactorization {
    pub fn of(mut m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::PreconditionViolation("level 0".into()));
        }
        let mut out = BTreeMap::new();
        let mut d = 2;
        while d * d <= m {
            while m % d == 0 {
                *out.entry(d).or_insert(0) += 1;
                m /= d;
            }
            d += 1;
        }
        if m > 1 {
            *out.entry(m).or_insert(0) += 1;
        }
        Ok(LevelFactorization(out))
    }

    pub fn value(&self) -> u64 {
        self.0.iter().map(|(&p, &n)| p.pow(n)).product()
    }
}

/// Congruence subgroups of `SL(2, Z)` handled by [`c_delta`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CongruenceSubgroup {
    Gamma0(u64),
    Gamma(u64),
}

/// Default bounds on the level for [`c_delta`].
pub const GAMMA0_LEVEL_CAP: u64 = 500;
pub const GAMMA_LEVEL_CAP: u64 = 50;

/// Fixed points of `γ` on `Γ/Δ` and the index `[Γ : Δ]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedPointCount {
    pub count: u128,
    pub index: u128,
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: Rational,
}

fn check_sl2z(gamma: &[[i64; 2]; 2]) -> Result<()> {
    let det = gamma[0][0] as i128 * gamma[1][1] as i128 - gamma[0][1] as i128 * gamma[1][0] as i128;
    if det != 1 {
        return Err(Error::PreconditionViolation(format!(
            "{gamma:?} has determinant {det}"
        )));
    }
    Ok(())
}

fn reduce(v: i64, m: u64) -> u64 {
    (v as i128).rem_euclid(m as i128) as u64
}

/// `[Γ : Γ_0(M)] = M prod (1 + 1/p)`.
pub fn gamma0_index(m: u64) -> Result<u128> {
    let f = LevelFactorization::of(m)?;
    Ok(f.0.iter().map(|(&p, &n)| (p as u128).pow(n - 1) * (p as u128 + 1)).product())
}

/// `[Γ : Γ(M)] = M^3 prod (1 - 1/p^2)`.
pub fn gamma_index(m: u64) -> Result<u128> {
    let f = LevelFactorization::of(m)?;
    Ok(f.0
        .iter()
        .map(|(&p, &n)| {
            let p = p as u128;
            p.pow(3 * n - 2) * (p * p - 1)
        })
        .product())
}

/// Fixed points of `γ` on `P^1(Z/M)` by direct scan of primitive pairs.
fn gamma0_fixed_points_direct(gamma: &[[i64; 2]; 2], m: u64) -> u128 {
    let (a, b, c, d) = (
        reduce(gamma[0][0], m) as u128,
        reduce(gamma[0][1], m) as u128,
        reduce(gamma[1][0], m) as u128,
        reduce(gamma[1][1], m) as u128,
    );
    let mm = m as u128;
    let mut fixed_pairs = 0u128;
    let mut units = 0u128;
    for u in 0..mm {
        if u.gcd(&mm) == 1 {
            units += 1;
        }
        for v in 0..mm {
            if u.gcd(&v).gcd(&mm) != 1 {
                continue;
            }
            let nu = (a * u + b * v) % mm;
            let nv = (c * u + d * v) % mm;
            if (nu * v + mm * mm - nv * u % mm) % mm == 0 {
                fixed_pairs += 1;
            }
        }
    }
    // each point has φ(M) primitive representatives
    fixed_pairs / units
}

/// Fixed points of `γ` on `P^1(Z/M)` as a product over prime powers.
fn gamma0_fixed_points_crt(gamma: &[[i64; 2]; 2], m: u64) -> Result<u128> {
    let f = LevelFactorization::of(m)?;
    let mut total = 1u128;
    for (&p, &n) in &f.0 {
        let md = Modulus::new(p, n)?;
        let x = MatP::new(md, *gamma);
        total *= fixed_points_p1(&x) as u128;
    }
    Ok(total)
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Calls `f(a, b, c, d)` for every element of `SL(2, Z/M)`, `M` arbitrary.
pub fn for_each_sl2_mod(m: u64, mut f: impl FnMut(u64, u64, u64, u64)) {
    let mm = m as i128;
    for a in 0..m {
        for c in 0..m {
            let (g, s, t) = ext_gcd(a as i128, c as i128);
            let (g2, s2, _) = ext_gcd(g, mm);
            if g2 != 1 {
                continue;
            }
            // a s s2 + c t s2 ≡ 1 (mod M): d0 = s s2, b0 = -t s2
            let d0 = (s * s2).rem_euclid(mm) as u64;
            let b0 = (-t * s2).rem_euclid(mm) as u64;
            for k in 0..m {
                let b = ((b0 as u128 + k as u128 * a as u128) % m as u128) as u64;
                let d = ((d0 as u128 + k as u128 * c as u128) % m as u128) as u64;
                f(a, b, c, d);
            }
        }
    }
}

/// `c_Δ(γ)`: fixed points of `γ` on `Γ/Δ`, with the index `[Γ : Δ]`.
pub fn c_delta(gamma: &[[i64; 2]; 2], delta: CongruenceSubgroup) -> Result<FixedPointCount> {
    check_sl2z(gamma)?;
    let (count, index) = match delta {
        CongruenceSubgroup::Gamma0(m) => {
            if !(2..=GAMMA0_LEVEL_CAP).contains(&m) {
                return Err(Error::BudgetExceeded {
                    required: m as u128,
                    cap: GAMMA0_LEVEL_CAP as u128,
                });
            }
            let direct = gamma0_fixed_points_direct(gamma, m);
            let crt = gamma0_fixed_points_crt(gamma, m)?;
            if direct != crt {
                return Err(Error::Invariant(format!(
                    "fixed points on P^1(Z/{m}): scan {direct}, product {crt}"
                )));
            }
            (direct, gamma0_index(m)?)
        }
        CongruenceSubgroup::Gamma(m) => {
            if !(2..=GAMMA_LEVEL_CAP).contains(&m) {
                return Err(Error::BudgetExceeded {
                    required: m as u128,
                    cap: GAMMA_LEVEL_CAP as u128,
                });
            }
            let (a, b, c, d) = (
                reduce(gamma[0][0], m) as u128,
                reduce(gamma[0][1], m) as u128,
                reduce(gamma[1][0], m) as u128,
                reduce(gamma[1][1], m) as u128,
            );
            let mm = m as u128;
            let mut order = 0u128;
            let mut fixed = 0u128;
            // δ Γ(M) is fixed iff δ^-1 γ δ ≡ 1 (mod M), i.e. γ δ ≡ δ
            for_each_sl2_mod(m, |x, y, z, w| {
                order += 1;
                let (x, y, z, w) = (x as u128, y as u128, z as u128, w as u128);
                if (a * x + b * z) % mm == x
                    && (a * y + b * w) % mm == y
                    && (c * x + d * z) % mm == z
                    && (c * y + d * w) % mm == w
                {
                    fixed += 1;
                }
            });
            let index = gamma_index(m)?;
            if order != index {
                return Err(Error::Invariant(format!(
                    "|SL(2, Z/{m})| scanned as {order}, formula gives {index}"
                )));
            }
            (fixed, index)
        }
    };
    Ok(FixedPointCount {
        count,
        index,
        ratio: Rational::new(count, index),
    })
}

/// `β(N, x, δ) = prod_{p | N, λ_p(x) < δ n_p} p^{n_p}`, with `δ = num/den`.
pub fn beta(level: &LevelFactorization, x: &[[i64; 2]; 2], delta: (u64, u64)) -> Result<u64> {
    let (num, den) = delta;
    let mut out = 1u64;
    for (&p, &n) in &level.0 {
        // λ_p only matters below δ n_p, so that much precision suffices
        let needed = (num as u128 * n as u128).div_ceil(den as u128) as u32 + 1;
        let md = Modulus::new(p, needed)?;
        let lam = lambda_p(&MatP::new(md, *x))?;
        // λ < δ n  ⟺  λ den < num n
        if !lam.capped && (lam.value as u128) * (den as u128) < (num as u128) * (n as u128) {
            out *= p.pow(n);
        }
    }
    Ok(out)
}

/// Both summation orders of the unipotent orbital volume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitalVolume {
    pub count: u128,
    pub count_by_conjugator: u128,
    pub total: u128,
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: Rational,
}

/// `#{(u, k) : k^-1 u k ∈ K} / (|U| |SL(2, Z/p^n)|)` with `U` upper unitriangular.
pub fn unipotent_orbital_volume<K: Membership + Sync>(
    k_group: &K,
    modulus: Modulus,
    cap: u128,
) -> Result<OrbitalVolume> {
    let q = modulus.value();
    let order = sl2_order(modulus);
    let total = order * q as u128;
    check_budget(total, cap)?;
    let unipotents: Vec<MatP> = (0..q).map(|t| MatP::from_key(modulus, [1, t, 0, 1])).collect();
    let inv_of = |k: &MatP| {
        MatP::from_key(
            modulus,
            [
                k.get(1, 1),
                modulus.neg(k.get(0, 1)),
                modulus.neg(k.get(1, 0)),
                k.get(0, 0),
            ],
        )
    };
    let mut conjugators = Vec::with_capacity(order as usize);
    for_each_sl2(modulus, |k| conjugators.push(*k));
    // conjugators outside, unipotents inside
    let row_counts: u128 = conjugators
        .par_iter()
        .map(|k| {
            let k_inv = inv_of(k);
            unipotents
                .iter()
                .filter(|u| k_group.contains(&k_inv.mul(u).mul(k)))
                .count() as u128
        })
        .sum();
    // unipotents outside, conjugators inside
    let by_unipotent: u128 = unipotents
        .par_iter()
        .map(|u| {
            conjugators
                .iter()
                .filter(|k| k_group.contains(&inv_of(k).mul(u).mul(k)))
                .count() as u128
        })
        .sum();
    if row_counts != by_unipotent {
        return Err(Error::Invariant(format!(
            "orbital volume counts disagree: {by_unipotent} vs {row_counts}"
        )));
    }
    Ok(OrbitalVolume {
        count: by_unipotent,
        count_by_conjugator: row_counts,
        total,
        ratio: Rational::new(by_unipotent, total),
    })
}

/// Level of the group generated by `[k, x]` for `k ∈ K(p)` mod `p^N`,
/// against `λ_p(x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommutatorProbe {
    pub lambda: Valuation,
    pub level: Option<u32>,
    pub group_order: usize,
    /// `level - λ_p(x)` when both are finite
    pub offset: Option<i64>,
}

pub fn commutator_level_probe(x: &MatP, closure_cap: usize) -> Result<CommutatorProbe> {
    let md = x.modulus();
    let lambda = lambda_p(x)?;
    let x_inv = x.inverse()?;
    let mut gens = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for k in principal_congruence_elements(md, 1, closure_cap)? {
        let comm = k.mul(x).mul(&k.inverse()?).mul(&x_inv);
        if seen.insert(comm.key()) {
            gens.push(comm);
        }
    }
    let cert = group_level(&gens, md, closure_cap)?;
    let offset = match (cert.level, lambda.capped) {
        (Some(l), false) => Some(l as i64 - lambda.value as i64),
        _ => None,
    };
    Ok(CommutatorProbe {
        lambda,
        level: cert.level,
        group_order: cert.group_order,
        offset,
    })
}

/// One row of the decay table for `γ = [[1, 1], [0, 1]]`, `Δ = Γ_0(p^n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecayRow {
    pub p: u64,
    pub n: u32,
    pub count: u128,
    pub index: u128,
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub predicted: Rational,
    /// `ratio^3 * index <= 1`, i.e. `ratio <= index^{-1/3}`
    pub below_cube_root: bool,
}

pub fn decay_row(p: u64, n: u32) -> Result<DecayRow> {
    let m = p.pow(n);
    let fp = c_delta(&[[1, 1], [0, 1]], CongruenceSubgroup::Gamma0(m))?;
    let pp = p as u128;
    let predicted = Rational::new(pp, pp + 1) * Rational::new(1, pp.pow(n.div_ceil(2)));
    let r = fp.ratio;
    let cube = r * r * r * Rational::from_integer(fp.index);
    Ok(DecayRow {
        p,
        n,
        count: fp.count,
        index: fp.index,
        ratio: r,
        predicted,
        below_cube_root: cube <= Rational::from_integer(1),
    })
}
