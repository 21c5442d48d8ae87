//! The maps `Liec` and `grpc` between residually-unipotent-generated
//! subgroups of `SL(2, Z/p^N)` and Lie lattices in `sl(2)`, and their checks.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use super::fp::{self, FpLieSubalgebra, FpSubgroup};
use crate::error::{Error, Result};
use crate::explog::{
    exp_congruence, exp_extended, log_congruence, log_extended, NilpotentResidue,
    UnipotentResidue, EXTENDED_PRIME_FLOOR,
};
use crate::lattice::{self, Coords, LieLattice};
use crate::padic::{level_of_group, Closure, FiniteGroup, MatP, Modulus};
use crate::sampling;

fn require_floor(modulus: Modulus) -> Result<()> {
    if modulus.p() < EXTENDED_PRIME_FLOOR {
        return Err(Error::UnsupportedPrime {
            p: modulus.p(),
            floor: EXTENDED_PRIME_FLOOR,
        });
    }
    Ok(())
}

/// Span of `log` of the residually unipotent elements of a finite group.
pub fn liec_of_group(group: &FiniteGroup) -> Result<LieLattice> {
    let md = group.modulus();
    require_floor(md)?;
    let mut logs = Vec::new();
    for g in group.elements() {
        if g.residually_unipotent() {
            let x = log_extended(&UnipotentResidue::new(*g)?)?;
            logs.push(lattice::from_matrix(x.matrix())?);
        }
    }
    let l = LieLattice::from_generators(md, &logs)?;
    if !l.is_subalgebra_mod(md.precision() - 1)? {
        return Err(Error::BracketClosureAnomaly(format!(
            "span of logs at {md} with divisors {:?}",
            l.divisors()
        )));
    }
    Ok(l)
}

/// `Liec(H)` for the subgroup generated by `generators`.
pub fn liec_padic(generators: &[MatP], modulus: Modulus, closure_cap: usize) -> Result<LieLattice> {
    require_floor(modulus)?;
    for g in generators {
        if g.det() != 1 % modulus.value() {
            return Err(Error::PreconditionViolation(format!("{g} is not in SL(2)")));
        }
    }
    let group = FiniteGroup::generated_by(modulus, generators, closure_cap)?;
    liec_of_group(&group)
}

/// `grpc(L)`: closure of `exp` of every residually nilpotent element of `L`
/// modulo `p^N`, enumerated exactly.
pub fn grpc_padic(l: &LieLattice, enumeration_cap: usize, closure_cap: usize) -> Result<FiniteGroup> {
    let md = l.modulus();
    require_floor(md)?;
    let mut closure = Closure::new(md, closure_cap);
    for x in l.elements(enumeration_cap)? {
        let mx = lattice::to_matrix(md, &x);
        if !mx.residually_nilpotent() {
            continue;
        }
        let g = exp_extended(&NilpotentResidue::new(mx)?)?;
        closure.add_generator(g.matrix())?;
    }
    Ok(closure.into_group())
}

fn coord_set(l: &LieLattice, cap: usize, filter: impl Fn(&Coords) -> bool) -> Result<BTreeSet<Coords>> {
    Ok(l.elements(cap)?.into_iter().filter(|x| filter(x)).collect())
}

fn fp_algebra_of(l: &LieLattice) -> Result<FpLieSubalgebra> {
    let p = l.modulus().p();
    FpLieSubalgebra::span(p, &l.spanning_set())
}

/// Outcome of [`roundtrip_check_padic`].
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct PadicRoundTrip {
    pub p: u64,
    #[serde(rename = "N")]
    pub precision: u32,
    pub samples: usize,
    pub from_group_checks: usize,
    pub from_algebra_checks: usize,
    pub level_checks: usize,
    pub reduction_checks: usize,
    pub group_orders: Vec<usize>,
    pub failures: Vec<String>,
}

impl PadicRoundTrip {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random subgroup generated by one or two elements reducing to upper
/// unitriangular matrices mod `p`, optionally conjugated.
pub fn sample_unipotent_preimage_generators<R: Rng>(modulus: Modulus, rng: &mut R) -> Vec<MatP> {
    let count = rng.gen_range(1..=2);
    let conj = if rng.gen_bool(0.5) {
        Some(sampling::sl2(modulus, rng))
    } else {
        None
    };
    (0..count)
        .map(|_| {
            let depth = rng.gen_range(0..modulus.precision());
            let b = sampling::residue(modulus, rng) % modulus.value();
            let b = modulus.reduce(b * modulus.p_pow(depth));
            let top = MatP::from_key(modulus, [1, b, 0, 1]);
            let j = rng.gen_range(1..=modulus.precision());
            let g = top.mul(&sampling::principal_congruence(modulus, j, rng));
            match conj {
                Some(s) => s.mul(&g).mul(&s.inverse().expect("SL(2) element")),
                None => g,
            }
        })
        .collect()
}

/// Checks, on `samples` random residually-unipotent-generated subgroups `H`:
///
/// * `Liec(H) ∩ p sl(2) = log(H ∩ K(p))`;
/// * `grpc(L) ∩ K(p) = exp(L ∩ p sl(2))` for `L = Liec(H)`;
/// * `grpc(Liec(H)) = H` and `Liec(grpc(L)) = L`;
/// * `H` and `Liec(H)` have the same level;
/// * reduction mod `p` of `H` is `grpc` of the reduction of `Liec(H)`.
pub fn roundtrip_check_padic<R: Rng>(
    modulus: Modulus,
    samples: usize,
    rng: &mut R,
    enumeration_cap: usize,
    closure_cap: usize,
) -> Result<PadicRoundTrip> {
    require_floor(modulus)?;
    let p = modulus.p();
    let mut report = PadicRoundTrip {
        p,
        precision: modulus.precision(),
        samples,
        from_group_checks: 0,
        from_algebra_checks: 0,
        level_checks: 0,
        reduction_checks: 0,
        group_orders: Vec::new(),
        failures: Vec::new(),
    };
    for sample in 0..samples {
        let gens = sample_unipotent_preimage_generators(modulus, rng);
        let h = FiniteGroup::generated_by(modulus, &gens, closure_cap)?;
        report.group_orders.push(h.order());
        let l = liec_of_group(&h)?;
        let in_p = |x: &Coords| lattice::min_valuation(modulus, x) >= 1;

        let lattice_part = coord_set(&l, enumeration_cap, in_p)?;
        let mut log_part = BTreeSet::new();
        for g in h.intersect_principal(1)? {
            log_part.insert(lattice::from_matrix(&log_congruence(&g)?)?);
        }
        if lattice_part != log_part {
            report.failures.push(format!(
                "sample {sample}: Liec(H) ∩ p g has {} elements, log(H ∩ K(p)) has {}",
                lattice_part.len(),
                log_part.len()
            ));
        }
        report.from_group_checks += 1;

        let g = grpc_padic(&l, enumeration_cap, closure_cap)?;
        let group_part: BTreeSet<_> = g.intersect_principal(1)?.iter().map(|x| x.key()).collect();
        let mut exp_part = BTreeSet::new();
        for x in &lattice_part {
            exp_part.insert(exp_congruence(&lattice::to_matrix(modulus, x))?.key());
        }
        if group_part != exp_part {
            report.failures.push(format!(
                "sample {sample}: grpc(L) ∩ K(p) has {} elements, exp(L ∩ p g) has {}",
                group_part.len(),
                exp_part.len()
            ));
        }
        report.from_algebra_checks += 1;

        if g != h {
            report.failures.push(format!(
                "sample {sample}: grpc(Liec(H)) has order {} but |H| = {}",
                g.order(),
                h.order()
            ));
        }
        let back = liec_of_group(&g)?;
        if !back.same_lattice(&l) {
            report.failures.push(format!(
                "sample {sample}: Liec(grpc(L)) has divisors {:?}, L has {:?}",
                back.divisors(),
                l.divisors()
            ));
        }

        let group_level = level_of_group(&h)?.level_or_cap();
        if group_level != l.level() {
            report.failures.push(format!(
                "sample {sample}: level of H is {group_level}, level of Liec(H) is {}",
                l.level()
            ));
        }
        report.level_checks += 1;

        let h_bar = FpSubgroup::generated_by(p, &gens, closure_cap)?;
        let l_bar = fp_algebra_of(&l)?;
        let g_bar = fp::grpc_bar(&l_bar, closure_cap)?;
        if g_bar != h_bar {
            report.failures.push(format!(
                "sample {sample}: grpc of Liec(H) mod p has order {}, H mod p has order {}",
                g_bar.order(),
                h_bar.order()
            ));
        }
        report.reduction_checks += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{principal_congruence_elements, DEFAULT_CLOSURE_CAP};

    fn md(p: u64, n: u32) -> Modulus {
        Modulus::new(p, n).unwrap()
    }

    #[test]
    fn liec_of_first_congruence_subgroup() {
        let m = md(5, 3);
        let k1 = principal_congruence_elements(m, 1, DEFAULT_CLOSURE_CAP).unwrap();
        let l = liec_of_group(&FiniteGroup::from_elements(m, k1)).unwrap();
        assert_eq!(l.divisors(), [1, 1, 1]);
    }

    #[test]
    fn liec_of_root_subgroup() {
        let m = md(5, 3);
        let u = MatP::new(m, [[1, 1], [0, 1]]);
        let l = liec_padic(&[u], m, DEFAULT_CLOSURE_CAP).unwrap();
        assert!(l.same_lattice(&LieLattice::from_generators(m, &[[1, 0, 0]]).unwrap()));
    }

    #[test]
    fn liec_of_full_group() {
        let m = md(5, 2);
        let gens = [MatP::new(m, [[1, 1], [0, 1]]), MatP::new(m, [[1, 0], [1, 1]])];
        let l = liec_padic(&gens, m, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(l.divisors(), [0, 0, 0]);
    }

    #[test]
    fn grpc_examples() {
        let m = md(5, 3);
        let g = grpc_padic(&LieLattice::standard(m, 1), 1 << 20, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(g.order(), 5usize.pow(6));
        let e = LieLattice::from_generators(m, &[[1, 0, 0]]).unwrap();
        let g = grpc_padic(&e, 1 << 20, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(g.order(), 125);
        assert!(g.elements().iter().all(|x| x.get(1, 0) == 0 && x.get(0, 0) == 1));
        let h = LieLattice::from_generators(m, &[[0, 1, 0]]).unwrap();
        let g = grpc_padic(&h, 1 << 20, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(g.order(), 25);
        assert!(g.elements().iter().all(|x| x.get(0, 1) == 0 && x.get(1, 0) == 0));
    }
}
