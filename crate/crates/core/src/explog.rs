//! Exponential and logarithm maps between matrices over `Z/p^N`.
//!
//! Three families are provided:
//!
//! * the congruence maps between `p' gl(2)` and `Γ(2, p')`, where `p' = p` for
//!   odd `p` and `p' = 4` for `p = 2`;
//! * the extended maps between residually nilpotent matrices and residually
//!   unipotent matrices, available for `p >= 5`;
//! * the truncated maps `exp^(p)` / `log^(p)` over `F_p`.
//!
//! All series are summed exactly. Each term `x^k / k!` (or `z^k / k`) is
//! computed at a raised working precision `N + e`, where `e` is the largest
//! `p`-adic valuation of a denominator that still matters, and is then divided
//! exactly by the `p`-part of the denominator. The number of terms is fixed in
//! advance from the bound `v_p(k!) <= (k - 1)/(p - 1)`, so no precision is lost
//! on the stated domains.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::{MatP, Modulus, N0};

/// `ε_p`: the exponent with `p' = p^ε_p`.
pub fn epsilon_p(p: u64) -> u32 {
    if p == 2 {
        2
    } else {
        1
    }
}

/// Smallest prime for the extended (residually nilpotent) domain, `2 N0 + 1`.
pub const EXTENDED_PRIME_FLOOR: u64 = 2 * N0 as u64 + 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Exp,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Domain {
    /// entries of the argument have valuation at least `e`
    Congruence(u32),
    /// argument squared vanishes mod p
    ResiduallyNilpotent,
}

/// Number of series terms and extra working precision for one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SeriesPlan {
    cutoff: u64,
    extra: u32,
}

fn vp_u64(p: u64, mut k: u64) -> u32 {
    let mut v = 0;
    while k % p == 0 {
        k /= p;
        v += 1;
    }
    v
}

fn plan(p: u64, precision: u32, domain: Domain, kind: Kind) -> SeriesPlan {
    let n = precision as u64;
    // beyond `safe` the linear lower bound on term valuations already exceeds N
    let safe = match domain {
        Domain::Congruence(e) => {
            let slope = e as u64 * (p - 1) - 1;
            (n * (p - 1)).saturating_sub(1).div_ceil(slope).max(1)
        }
        Domain::ResiduallyNilpotent => 1 + (2 * n * (p - 1)).div_ceil(p - 3),
    };
    let order = |k: u64| -> u64 {
        match domain {
            Domain::Congruence(e) => k * e as u64,
            Domain::ResiduallyNilpotent => k / N0 as u64,
        }
    };
    let mut fact_val = 0u32;
    let mut last_live = 0u64;
    let mut denominators = Vec::with_capacity(safe as usize);
    for k in 1..=safe {
        fact_val += vp_u64(p, k);
        let den = match kind {
            Kind::Exp => fact_val,
            Kind::Log => vp_u64(p, k),
        };
        denominators.push(den);
        if order(k) < n + den as u64 {
            last_live = k;
        }
    }
    let extra = denominators
        .iter()
        .take(last_live as usize)
        .copied()
        .max()
        .unwrap_or(0);
    SeriesPlan {
        cutoff: last_live + 1,
        extra,
    }
}

fn sum_series(x: &MatP, domain: Domain, kind: Kind) -> Result<MatP> {
    let target = x.modulus();
    let p = target.p();
    let plan = plan(p, target.precision(), domain, kind);
    let work = target
        .with_precision(target.precision() + plan.extra)
        .map_err(|_| {
            Error::UnsupportedPrecision(format!(
                "series at {target} needs {} extra digits",
                plan.extra
            ))
        })?;
    let xw = x.lift_to(work);
    let mut acc = match kind {
        Kind::Exp => MatP::identity(target),
        Kind::Log => MatP::zero(target),
    };
    let mut power = MatP::identity(work);
    let mut fact_val = 0u32;
    let mut fact_unit = 1u64;
    for k in 1..plan.cutoff {
        power = power.mul(&xw);
        let v = vp_u64(p, k);
        let unit = work.reduce(k / p.pow(v));
        let (den_val, den_unit) = match kind {
            Kind::Exp => {
                fact_val += v;
                fact_unit = work.mul(fact_unit, unit);
                (fact_val, fact_unit)
            }
            Kind::Log => (v, unit),
        };
        let inv = work.inv(den_unit).expect("unit part of denominator");
        let mut term = MatP::zero(target);
        for i in 0..N0 {
            for j in 0..N0 {
                let q = work.div_p_pow(power.get(i, j), den_val)?;
                term.set(i, j, target.reduce(work.mul(q, inv)));
            }
        }
        acc = if kind == Kind::Log && k % 2 == 0 {
            acc.sub(&term)
        } else {
            acc.add(&term)
        };
    }
    Ok(acc)
}

fn identity_offset(g: &MatP) -> MatP {
    g.sub(&MatP::identity(g.modulus()))
}

/// `exp` on `p' gl(2, Z/p^N)`.
pub fn exp_congruence(x: &MatP) -> Result<MatP> {
    let e = epsilon_p(x.modulus().p());
    if x.min_valuation() < e {
        return Err(Error::DomainViolation(format!(
            "exp needs entries of valuation >= {e}, got {x}"
        )));
    }
    sum_series(x, Domain::Congruence(e), Kind::Exp)
}

/// `log` on `Γ(2, p')`, i.e. `g ≡ 1 (mod p')`.
pub fn log_congruence(g: &MatP) -> Result<MatP> {
    let e = epsilon_p(g.modulus().p());
    let z = identity_offset(g);
    if z.min_valuation() < e {
        return Err(Error::DomainViolation(format!(
            "log needs g ≡ 1 mod p^{e}, got {g}"
        )));
    }
    sum_series(&z, Domain::Congruence(e), Kind::Log)
}

/// Class of `exp(x)` modulo `p^n`; depends only on `x mod p^n` for `ε_p <= n`.
pub fn exp_congruence_classes(x: &MatP, n: u32) -> Result<MatP> {
    let modulus = x.modulus();
    let e = epsilon_p(modulus.p());
    if n < e || n > modulus.precision() {
        return Err(Error::DomainViolation(format!(
            "target exponent {n} outside [{e}, {}]",
            modulus.precision()
        )));
    }
    exp_congruence(x)?.reduce_to(n)
}

fn require_extended_prime(modulus: Modulus) -> Result<()> {
    if modulus.p() < EXTENDED_PRIME_FLOOR {
        return Err(Error::UnsupportedPrime {
            p: modulus.p(),
            floor: EXTENDED_PRIME_FLOOR,
        });
    }
    Ok(())
}

/// A matrix whose reduction mod `p` is nilpotent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NilpotentResidue(MatP);

impl NilpotentResidue {
    pub fn new(x: MatP) -> Result<Self> {
        if !x.residually_nilpotent() {
            return Err(Error::DomainViolation(format!(
                "{x} is not residually nilpotent"
            )));
        }
        Ok(NilpotentResidue(x))
    }

    pub fn matrix(&self) -> &MatP {
        &self.0
    }
}

/// A matrix whose reduction mod `p` is unipotent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UnipotentResidue(MatP);

impl UnipotentResidue {
    pub fn new(g: MatP) -> Result<Self> {
        if !g.residually_unipotent() {
            return Err(Error::DomainViolation(format!(
                "{g} is not residually unipotent"
            )));
        }
        Ok(UnipotentResidue(g))
    }

    pub fn matrix(&self) -> &MatP {
        &self.0
    }
}

/// `exp` on residually nilpotent matrices (`p >= 5`).
pub fn exp_extended(x: &NilpotentResidue) -> Result<UnipotentResidue> {
    require_extended_prime(x.0.modulus())?;
    let g = sum_series(&x.0, Domain::ResiduallyNilpotent, Kind::Exp)?;
    Ok(UnipotentResidue(g))
}

/// `log` on residually unipotent matrices (`p >= 5`).
pub fn log_extended(g: &UnipotentResidue) -> Result<NilpotentResidue> {
    require_extended_prime(g.0.modulus())?;
    let z = identity_offset(&g.0);
    let x = sum_series(&z, Domain::ResiduallyNilpotent, Kind::Log)?;
    Ok(NilpotentResidue(x))
}

fn require_fp(x: &MatP) -> Result<()> {
    if x.modulus().precision() != 1 {
        return Err(Error::DomainViolation(format!(
            "truncated maps act on matrices over F_p, got precision {}",
            x.modulus().precision()
        )));
    }
    if x.modulus().p() < N0 as u64 {
        return Err(Error::UnsupportedPrime {
            p: x.modulus().p(),
            floor: N0 as u64,
        });
    }
    Ok(())
}

/// `exp^(p)(y) = sum_{i<p} y^i / i!` for nilpotent `y` over `F_p`.
pub fn exp_trunc(y: &MatP) -> Result<MatP> {
    require_fp(y)?;
    if y.pow(N0 as u64) != MatP::zero(y.modulus()) {
        return Err(Error::DomainViolation(format!("{y} is not nilpotent")));
    }
    let m = y.modulus();
    let p = m.p();
    let mut acc = MatP::identity(m);
    let mut power = MatP::identity(m);
    let mut fact = 1u64;
    for i in 1..p {
        power = power.mul(y);
        fact = m.mul(fact, i);
        acc = acc.add(&power.scale(m.inv(fact).unwrap()));
    }
    Ok(acc)
}

/// `log^(p)(u) = sum_{0<i<p} (-1)^(i+1) (u - 1)^i / i` for unipotent `u` over `F_p`.
pub fn log_trunc(u: &MatP) -> Result<MatP> {
    require_fp(u)?;
    let m = u.modulus();
    let z = identity_offset(u);
    if z.pow(N0 as u64) != MatP::zero(m) {
        return Err(Error::DomainViolation(format!("{u} is not unipotent")));
    }
    let p = m.p();
    let mut acc = MatP::zero(m);
    let mut power = MatP::identity(m);
    for i in 1..p {
        power = power.mul(&z);
        let term = power.scale(m.inv(i).unwrap());
        acc = if i % 2 == 0 { acc.sub(&term) } else { acc.add(&term) };
    }
    Ok(acc)
}

/// Summary of a seeded exp/log round-trip run.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct RoundTripSummary {
    pub p: u64,
    #[serde(rename = "N")]
    pub precision: u32,
    pub exp_log_round_trips: usize,
    pub log_exp_round_trips: usize,
    pub congruence_pairs: usize,
    pub extended_round_trips: usize,
    pub commuting_square_checks: usize,
    pub failures: Vec<String>,
}

impl RoundTripSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs `samples` random round trips on the congruence domain (and on the
/// extended domain when `p >= 5`), plus `pairs` congruence checks
/// `exp(x + p^n y) ≡ exp(x) (mod p^n)` for every `n` in `class_exponents`.
pub fn round_trip_selftest<R: rand::Rng>(
    modulus: Modulus,
    samples: usize,
    pairs: usize,
    class_exponents: &[u32],
    rng: &mut R,
) -> Result<RoundTripSummary> {
    use crate::sampling;
    let mut summary = RoundTripSummary {
        p: modulus.p(),
        precision: modulus.precision(),
        exp_log_round_trips: 0,
        log_exp_round_trips: 0,
        congruence_pairs: 0,
        extended_round_trips: 0,
        commuting_square_checks: 0,
        failures: Vec::new(),
    };
    for _ in 0..samples {
        let x = sampling::congruence_algebra_element(modulus, rng);
        let back = log_congruence(&exp_congruence(&x)?)?;
        if back != x {
            summary.failures.push(format!("log(exp({x})) = {back}"));
        }
        summary.exp_log_round_trips += 1;
        let g = sampling::congruence_group_element(modulus, rng);
        let back = exp_congruence(&log_congruence(&g)?)?;
        if back != g {
            summary.failures.push(format!("exp(log({g})) = {back}"));
        }
        summary.log_exp_round_trips += 1;
    }
    for &n in class_exponents {
        if n > modulus.precision() {
            continue;
        }
        for _ in 0..pairs {
            let x = sampling::congruence_algebra_element(modulus, rng);
            let y = sampling::matrix(modulus, rng).scale(modulus.p_pow(n));
            let lhs = exp_congruence_classes(&x.add(&y), n)?;
            let rhs = exp_congruence_classes(&x, n)?;
            if lhs != rhs {
                summary
                    .failures
                    .push(format!("exp({x} + p^{n} {y}) differs mod p^{n}"));
            }
            summary.congruence_pairs += 1;
        }
    }
    if modulus.p() >= EXTENDED_PRIME_FLOOR {
        let fp = modulus.with_precision(1)?;
        for _ in 0..samples {
            let x = NilpotentResidue::new(sampling::residually_nilpotent(modulus, rng))?;
            let g = exp_extended(&x)?;
            let back = log_extended(&g)?;
            if back != x {
                summary
                    .failures
                    .push(format!("log_ext(exp_ext({})) = {}", x.0, back.0));
            }
            summary.extended_round_trips += 1;
            let lhs = g.0.lift_to(fp);
            let rhs = exp_trunc(&x.0.lift_to(fp))?;
            if lhs != rhs {
                summary
                    .failures
                    .push(format!("reduction of exp_ext({}) is not exp^(p)", x.0));
            }
            summary.commuting_square_checks += 1;
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(p: u64, n: u32) -> Modulus {
        Modulus::new(p, n).unwrap()
    }

    #[test]
    fn exp_examples() {
        let md = m(3, 5);
        let pe = MatP::new(md, [[0, 3], [0, 0]]);
        assert_eq!(exp_congruence(&pe).unwrap(), MatP::new(md, [[1, 3], [0, 1]]));
        assert_eq!(exp_congruence(&MatP::zero(md)).unwrap(), MatP::identity(md));
        let md = m(3, 2);
        let h3 = MatP::new(md, [[3, 0], [0, -3]]);
        assert_eq!(exp_congruence(&h3).unwrap(), MatP::new(md, [[4, 0], [0, 7]]));
    }

    #[test]
    fn log_examples() {
        let md = m(7, 4);
        let u = MatP::new(md, [[1, 7], [0, 1]]);
        assert_eq!(log_congruence(&u).unwrap(), MatP::new(md, [[0, 7], [0, 0]]));
        assert_eq!(log_congruence(&MatP::identity(md)).unwrap(), MatP::zero(md));
    }

    #[test]
    fn domain_violations() {
        let md = m(3, 4);
        assert!(matches!(
            exp_congruence(&MatP::new(md, [[0, 1], [0, 0]])),
            Err(Error::DomainViolation(_))
        ));
        assert!(matches!(
            log_congruence(&MatP::new(md, [[1, 1], [0, 1]])),
            Err(Error::DomainViolation(_))
        ));
        let md2 = m(2, 6);
        assert!(exp_congruence(&MatP::new(md2, [[0, 2], [0, 0]])).is_err());
        assert!(exp_congruence(&MatP::new(md2, [[0, 4], [0, 0]])).is_ok());
        let x = MatP::new(md, [[0, 1], [0, 0]]);
        assert!(matches!(
            NilpotentResidue::new(x).and_then(|x| exp_extended(&x)),
            Err(Error::UnsupportedPrime { p: 3, floor: 5 })
        ));
    }

    #[test]
    fn truncated_maps() {
        let f5 = m(5, 1);
        let e = MatP::new(f5, [[0, 1], [0, 0]]);
        assert_eq!(exp_trunc(&e).unwrap(), MatP::new(f5, [[1, 1], [0, 1]]));
        for t in 0..5 {
            let u = MatP::new(f5, [[1, t], [0, 1]]);
            assert_eq!(log_trunc(&u).unwrap(), MatP::new(f5, [[0, t], [0, 0]]));
        }
        assert!(log_trunc(&MatP::new(f5, [[2, 0], [0, 3]])).is_err());
    }

    #[test]
    fn extended_exp_of_root_vector() {
        let md = m(5, 4);
        let e = NilpotentResidue::new(MatP::new(md, [[0, 1], [0, 0]])).unwrap();
        assert_eq!(
            *exp_extended(&e).unwrap().matrix(),
            MatP::new(md, [[1, 1], [0, 1]])
        );
    }

    #[test]
    fn plans_are_finite_and_small() {
        let pl = plan(3, 2, Domain::Congruence(1), Kind::Exp);
        // terms with k >= 5 vanish modulo 9 (v(x^k/k!) >= k - (k-1)/2 >= 2 + ...)
        assert!(pl.cutoff <= 6);
        let pl = plan(5, 6, Domain::ResiduallyNilpotent, Kind::Exp);
        assert!(pl.extra <= 6);
    }
}
