//! Finite subgroups of `SL(2, Z/p^N)`: closure under multiplication, the
//! congruence filtration, and the level of a subgroup.

use std::collections::HashSet;

use serde::Serialize;

use super::matrix::{MatKey, MatP};
use super::modulus::Modulus;
use crate::error::{Error, Result};

/// Default element cap for closure computations.
pub const DEFAULT_CLOSURE_CAP: usize = 1_000_000;

/// Incremental closure of a generating set inside `GL(2, Z/p^N)`.
///
/// Invariant after every call: the element set is closed under right
/// multiplication by every generator added so far, hence (being finite) a group.
#[derive(Debug, Clone)]
pub struct Closure {
    modulus: Modulus,
    cap: usize,
    seen: HashSet<MatKey>,
    elements: Vec<MatP>,
    generators: Vec<MatP>,
}

impl Closure {
    pub fn new(modulus: Modulus, cap: usize) -> Self {
        let id = MatP::identity(modulus);
        let mut seen = HashSet::new();
        seen.insert(id.key());
        Closure {
            modulus,
            cap,
            seen,
            elements: vec![id],
            generators: Vec::new(),
        }
    }

    pub fn contains(&self, g: &MatP) -> bool {
        self.seen.contains(&g.key())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[MatP] {
        &self.elements
    }

    pub fn generators(&self) -> &[MatP] {
        &self.generators
    }

    fn push(&mut self, g: MatP) -> Result<bool> {
        if self.seen.insert(g.key()) {
            if self.elements.len() >= self.cap {
                return Err(Error::ClosureBudgetExceeded { cap: self.cap });
            }
            self.elements.push(g);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Adds a generator; returns `false` if it was already in the group.
    pub fn add_generator(&mut self, g: &MatP) -> Result<bool> {
        if g.modulus() != self.modulus {
            return Err(Error::ModulusMismatch {
                left: self.modulus.to_string(),
                right: g.modulus().to_string(),
            });
        }
        if g.det() % self.modulus.p() == 0 {
            return Err(Error::NonUnit {
                valuation: self.modulus.val(g.det()),
            });
        }
        if self.contains(g) {
            return Ok(false);
        }
        self.generators.push(*g);
        // old elements times the new generator
        let old = self.elements.len();
        let mut frontier = old;
        for i in 0..old {
            let h = self.elements[i].mul(g);
            self.push(h)?;
        }
        // new elements times every generator
        while frontier < self.elements.len() {
            let h = self.elements[frontier];
            frontier += 1;
            for k in 0..self.generators.len() {
                let next = h.mul(&self.generators[k]);
                self.push(next)?;
            }
        }
        Ok(true)
    }

    pub fn into_group(self) -> FiniteGroup {
        FiniteGroup::from_elements(self.modulus, self.elements)
    }
}

/// A finite subgroup stored as its sorted element set, so equality of
/// groups is equality of the canonical element lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    modulus: Modulus,
    elements: Vec<MatP>,
    keys: HashSet<MatKey>,
}

impl FiniteGroup {
    pub fn from_elements(modulus: Modulus, mut elements: Vec<MatP>) -> Self {
        elements.sort_by_key(|g| g.key());
        elements.dedup();
        let keys = elements.iter().map(|g| g.key()).collect();
        FiniteGroup {
            modulus,
            elements,
            keys,
        }
    }

    pub fn generated_by(modulus: Modulus, generators: &[MatP], cap: usize) -> Result<Self> {
        let mut closure = Closure::new(modulus, cap);
        for g in generators {
            closure.add_generator(g)?;
        }
        Ok(closure.into_group())
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[MatP] {
        &self.elements
    }

    pub fn contains(&self, g: &MatP) -> bool {
        self.keys.contains(&g.key())
    }

    pub fn is_subset_of(&self, other: &FiniteGroup) -> bool {
        self.elements.iter().all(|g| other.contains(g))
    }

    /// Elements lying in the principal congruence subgroup `K(p^m)`.
    pub fn intersect_principal(&self, m: u32) -> Result<Vec<MatP>> {
        let mut out = Vec::new();
        for g in &self.elements {
            if g.in_principal_congruence(m)? {
                out.push(*g);
            }
        }
        Ok(out)
    }

    /// Image under reduction to precision `m`.
    pub fn reduce_to(&self, m: u32) -> Result<FiniteGroup> {
        let target = self.modulus.with_precision(m)?;
        let elements = self.elements.iter().map(|g| g.lift_to(target)).collect();
        Ok(FiniteGroup::from_elements(target, elements))
    }

    /// Order-independent fingerprint (FNV over the sorted keys).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for g in &self.elements {
            for &e in g.key().iter() {
                h ^= e;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Something that decides membership in a subgroup of `SL(2, Z/p^n)`.
pub trait Membership {
    fn contains(&self, g: &MatP) -> bool;
}

impl Membership for FiniteGroup {
    fn contains(&self, g: &MatP) -> bool {
        FiniteGroup::contains(self, g)
    }
}

impl<F: Fn(&MatP) -> bool> Membership for F {
    fn contains(&self, g: &MatP) -> bool {
        self(g)
    }
}

/// Order of `SL(2, Z/p^N)`, i.e. `p^(3N) (1 - p^-2)`.
pub fn sl2_order(modulus: Modulus) -> u128 {
    let p = modulus.p() as u128;
    let pn = modulus.value() as u128;
    pn * pn * pn / (p * p) * (p * p - 1)
}

/// Order of the image of `K(p^n)` in `SL(2, Z/p^N)`.
pub fn principal_congruence_order(modulus: Modulus, n: u32) -> u128 {
    if n == 0 {
        return sl2_order(modulus);
    }
    let k = modulus.precision().saturating_sub(n);
    (modulus.p() as u128).pow(3 * k)
}

/// Calls `f` on every element of `SL(2, Z/p^N)`.
///
/// First columns `(a, c)` run over primitive vectors; for each, the solutions
/// of `ad - bc = 1` form the coset `(b0, d0) + t (a, c)`.
pub fn for_each_sl2(modulus: Modulus, mut f: impl FnMut(&MatP)) {
    let q = modulus.value();
    for a in 0..q {
        for c in 0..q {
            if !modulus.is_unit(a) && !modulus.is_unit(c) {
                continue;
            }
            let (b0, d0) = if modulus.is_unit(a) {
                (0, modulus.inv(a).unwrap())
            } else {
                // c unit: -b c = 1
                (modulus.neg(modulus.inv(c).unwrap()), 0)
            };
            for t in 0..q {
                let b = modulus.add(b0, modulus.mul(t, a));
                let d = modulus.add(d0, modulus.mul(t, c));
                f(&MatP::from_key(modulus, [a, b, c, d]));
            }
        }
    }
}

pub fn sl2_elements(modulus: Modulus, cap: usize) -> Result<Vec<MatP>> {
    let order = sl2_order(modulus);
    if order > cap as u128 {
        return Err(Error::BudgetExceeded {
            required: order,
            cap: cap as u128,
        });
    }
    let mut out = Vec::with_capacity(order as usize);
    for_each_sl2(modulus, |g| out.push(*g));
    Ok(out)
}

/// Elements of the image of `K(p^n)` in `SL(2, Z/p^N)`, `n >= 1`.
pub fn principal_congruence_elements(modulus: Modulus, n: u32, cap: usize) -> Result<Vec<MatP>> {
    if n == 0 {
        return sl2_elements(modulus, cap);
    }
    if n > modulus.precision() {
        return Err(Error::PrecisionExceeded {
            requested: n,
            precision: modulus.precision(),
        });
    }
    let order = principal_congruence_order(modulus, n);
    if order > cap as u128 {
        return Err(Error::BudgetExceeded {
            required: order,
            cap: cap as u128,
        });
    }
    let step = modulus.p_pow(n);
    let count = modulus.value() / step;
    let mut out = Vec::with_capacity(order as usize);
    for ta in 0..count {
        let a = modulus.add(1, ta * step);
        let a_inv = modulus.inv(a).unwrap();
        for tb in 0..count {
            let b = tb * step;
            for tc in 0..count {
                let c = tc * step;
                // d = (1 + bc) / a
                let d = modulus.mul(modulus.add(1, modulus.mul(b, c)), a_inv);
                out.push(MatP::from_key(modulus, [a, b, c, d]));
            }
        }
    }
    Ok(out)
}

/// Result of [`group_level`].
#[derive(Debug, Clone, Serialize)]
pub struct LevelCertificate {
    /// Least `n <= N - 1` with `K(p^n) ⊆ H`, or `None` when no such `n` exists
    /// at this precision (the level is then `>= N`).
    pub level: Option<u32>,
    pub precision: u32,
    pub group_order: usize,
    /// `|H ∩ K(p^n)|`, equal to `|K(p^n) mod p^N|` when `level` is set.
    pub kernel_order: u128,
    /// Representatives of `H / K(p^n)`; `|H| = |reps| * |K(p^n)|`.
    #[serde(skip)]
    pub coset_representatives: Vec<MatP>,
}

impl LevelCertificate {
    /// Level exponent with the precision cap folded in.
    pub fn level_or_cap(&self) -> u32 {
        self.level.unwrap_or(self.precision)
    }
}

/// Level of the subgroup generated by `generators` inside `SL(2, Z/p^N)`.
pub fn group_level(generators: &[MatP], ambient: Modulus, cap: usize) -> Result<LevelCertificate> {
    for g in generators {
        if g.modulus() != ambient {
            return Err(Error::ModulusMismatch {
                left: ambient.to_string(),
                right: g.modulus().to_string(),
            });
        }
        if g.det() != 1 % ambient.value() {
            return Err(Error::PreconditionViolation(format!(
                "generator {g} is not in SL(2)"
            )));
        }
    }
    let group = FiniteGroup::generated_by(ambient, generators, cap)?;
    level_of_group(&group)
}

/// Level of an explicit subgroup; see [`group_level`].
pub fn level_of_group(group: &FiniteGroup) -> Result<LevelCertificate> {
    let modulus = group.modulus();
    let big_n = modulus.precision();
    for n in 0..big_n {
        let inside = group.intersect_principal(n)?.len() as u128;
        if inside == principal_congruence_order(modulus, n) {
            let reps = coset_representatives(group, n)?;
            debug_assert_eq!(reps.len() as u128 * inside, group.order() as u128);
            return Ok(LevelCertificate {
                level: Some(n),
                precision: big_n,
                group_order: group.order(),
                kernel_order: inside,
                coset_representatives: reps,
            });
        }
    }
    Ok(LevelCertificate {
        level: None,
        precision: big_n,
        group_order: group.order(),
        kernel_order: group.intersect_principal(big_n - 1)?.len() as u128,
        coset_representatives: Vec::new(),
    })
}

fn coset_representatives(group: &FiniteGroup, n: u32) -> Result<Vec<MatP>> {
    if n == 0 {
        return Ok(vec![MatP::identity(group.modulus())]);
    }
    let mut seen = HashSet::new();
    let mut reps = Vec::new();
    for g in group.elements() {
        if seen.insert(g.reduce_to(n)?.key()) {
            reps.push(*g);
        }
    }
    Ok(reps)
}
