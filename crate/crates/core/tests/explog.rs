use std::collections::BTreeSet;

use congruence_core::explog::{
    exp_congruence, exp_congruence_classes, exp_extended, exp_trunc, log_congruence, log_extended,
    log_trunc, round_trip_selftest, NilpotentResidue, UnipotentResidue,
};
use congruence_core::padic::{principal_congruence_elements, MatP, Modulus, DEFAULT_CLOSURE_CAP};
use congruence_core::{rng, sampling, Error};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn md(p: u64, n: u32) -> Modulus {
    Modulus::new(p, n).unwrap()
}

type RatMat = [[BigRational; 2]; 2];

fn rat(m: &MatP) -> RatMat {
    std::array::from_fn(|i| std::array::from_fn(|j| BigRational::from_integer(BigInt::from(m.get(i, j)))))
}

fn rat_mul(a: &RatMat, b: &RatMat) -> RatMat {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j]))
}

fn rat_identity() -> RatMat {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { BigRational::one() } else { BigRational::zero() }))
}

/// Reduces a `p`-integral rational matrix mod `p^N`.
fn to_residues(m: Modulus, a: &RatMat) -> MatP {
    let q = BigInt::from(m.value());
    let mut key = [0u64; 4];
    for i in 0..2 {
        for j in 0..2 {
            let (num, den) = (a[i][j].numer(), a[i][j].denom());
            let den_mod = u64::try_from(den.mod_floor(&q)).unwrap();
            let inv = m.inv(den_mod).expect("p-integral series sum");
            let num_mod = u64::try_from(num.mod_floor(&q)).unwrap();
            key[2 * i + j] = m.mul(num_mod, inv);
        }
    }
    MatP::from_key(m, key)
}

/// Partial sum of `sum_k coeff(k) z^k` over the rationals, `k < terms`.
fn series(z: &MatP, terms: usize, coeff: impl Fn(usize) -> BigRational) -> MatP {
    let zr = rat(z);
    let mut power = rat_identity();
    let mut acc: RatMat = std::array::from_fn(|_| std::array::from_fn(|_| BigRational::zero()));
    for k in 0..terms {
        let c = coeff(k);
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += &power[i][j] * &c;
            }
        }
        power = rat_mul(&power, &zr);
    }
    to_residues(z.modulus(), &acc)
}

fn oracle_exp(x: &MatP) -> MatP {
    let terms = 6 * x.modulus().precision() as usize + 12;
    let mut facts = vec![BigInt::one()];
    for k in 1..terms {
        let next = &facts[k - 1] * BigInt::from(k);
        facts.push(next);
    }
    series(x, terms, |k| BigRational::new(BigInt::one(), facts[k].clone()))
}

fn oracle_log(g: &MatP) -> MatP {
    let z = g.sub(&MatP::identity(g.modulus()));
    let terms = 6 * g.modulus().precision() as usize + 12;
    series(&z, terms, |k| {
        if k == 0 {
            BigRational::zero()
        } else {
            let sign = if k % 2 == 1 { 1 } else { -1 };
            BigRational::new(BigInt::from(sign), BigInt::from(k))
        }
    })
}

#[test]
fn congruence_maps_match_rational_series() {
    let mut r = rng::seeded(11);
    for (p, n) in [(2, 6), (3, 6), (5, 5), (7, 4)] {
        let m = md(p, n);
        for _ in 0..30 {
            let x = sampling::congruence_algebra_element(m, &mut r);
            assert_eq!(exp_congruence(&x).unwrap(), oracle_exp(&x), "exp {x}");
            let g = sampling::congruence_group_element(m, &mut r);
            assert_eq!(log_congruence(&g).unwrap(), oracle_log(&g), "log {g}");
        }
    }
}

#[test]
fn extended_maps_match_rational_series() {
    let mut r = rng::seeded(12);
    for (p, n) in [(5, 4), (7, 3), (11, 3)] {
        let m = md(p, n);
        for _ in 0..30 {
            let x = sampling::residually_nilpotent(m, &mut r);
            let g = exp_extended(&NilpotentResidue::new(x).unwrap()).unwrap();
            assert_eq!(*g.matrix(), oracle_exp(&x), "exp {x}");
            let back = log_extended(&g).unwrap();
            assert_eq!(*back.matrix(), oracle_log(g.matrix()));
        }
    }
}

#[test]
fn square_zero_matrices_exponentiate_linearly() {
    let m = md(7, 4);
    for (u, v, t) in [(1, 0, 1), (2, 3, 5), (0, 1, 100), (4, 4, 1)] {
        // t (u, v)^T (v, -u) squares to zero
        let x = MatP::new(m, [[t * u * v, -t * u * u], [t * v * v, -t * u * v]]);
        let g = exp_extended(&NilpotentResidue::new(x).unwrap()).unwrap();
        assert_eq!(*g.matrix(), MatP::identity(m).add(&x));
        assert_eq!(*log_extended(&g).unwrap().matrix(), x);
    }
}

#[test]
fn torus_and_borel_images() {
    let m = md(3, 3);
    let q = m.value() as i64;
    let mut torus_exp = BTreeSet::new();
    let mut borel_exp = BTreeSet::new();
    for t in (0..q).step_by(3) {
        torus_exp.insert(exp_congruence(&MatP::new(m, [[t, 0], [0, -t]])).unwrap().key());
        for b in (0..q).step_by(3) {
            borel_exp.insert(exp_congruence(&MatP::new(m, [[t, b], [0, -t]])).unwrap().key());
        }
    }
    let k1 = principal_congruence_elements(m, 1, DEFAULT_CLOSURE_CAP).unwrap();
    let torus: BTreeSet<_> = k1
        .iter()
        .filter(|g| g.get(0, 1) == 0 && g.get(1, 0) == 0)
        .map(|g| g.key())
        .collect();
    let borel: BTreeSet<_> = k1.iter().filter(|g| g.get(1, 0) == 0).map(|g| g.key()).collect();
    assert_eq!(torus_exp, torus);
    assert_eq!(borel_exp, borel);
}

#[test]
fn exp_is_multiplicative_on_commuting_pairs() {
    let mut r = rng::seeded(13);
    let m = md(5, 5);
    for _ in 0..50 {
        let z = sampling::congruence_algebra_element(m, &mut r);
        let (a, b) = (sampling::residue(m, &mut r), sampling::residue(m, &mut r));
        let (x, y) = (z.scale(a), z.mul(&z).scale(b));
        let lhs = exp_congruence(&x.add(&y)).unwrap();
        let rhs = exp_congruence(&x).unwrap().mul(&exp_congruence(&y).unwrap());
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn conjugation_equivariance() {
    let mut r = rng::seeded(14);
    let m = md(3, 6);
    for _ in 0..50 {
        let x = sampling::congruence_algebra_element(m, &mut r);
        let s = sampling::sl2(m, &mut r);
        let s_inv = s.inverse().unwrap();
        let lhs = exp_congruence(&s.mul(&x).mul(&s_inv)).unwrap();
        let rhs = s.mul(&exp_congruence(&x).unwrap()).mul(&s_inv);
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn domains_are_enforced() {
    let m = md(2, 5);
    let x = MatP::new(m, [[0, 2], [0, 0]]);
    assert!(matches!(exp_congruence(&x), Err(Error::DomainViolation(_))));
    let m = md(3, 3);
    assert!(matches!(
        exp_extended(&NilpotentResidue::new(MatP::new(m, [[0, 1], [0, 0]])).unwrap()),
        Err(Error::UnsupportedPrime { p: 3, floor: 5 })
    ));
    assert!(NilpotentResidue::new(MatP::identity(m)).is_err());
    assert!(UnipotentResidue::new(MatP::new(m, [[2, 0], [0, 2]])).is_err());
    assert!(exp_congruence_classes(&MatP::zero(m), 4).is_err());
}

#[test]
fn truncated_maps_are_inverse_on_nilpotents() {
    for p in [3u64, 5, 7, 11] {
        let m = md(p, 1);
        let q = p as i64;
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    let y = MatP::new(m, [[a, b], [c, -a]]);
                    if (a * a + b * c) % q != 0 {
                        assert!(exp_trunc(&y).is_err());
                        continue;
                    }
                    let u = exp_trunc(&y).unwrap();
                    assert_eq!(u.det(), 1);
                    assert_eq!(log_trunc(&u).unwrap(), y);
                }
            }
        }
    }
}

#[test]
fn selftest_passes_at_small_primes() {
    for p in [2u64, 3, 5, 7, 13] {
        let mut r = rng::seeded(p);
        let s = round_trip_selftest(md(p, 6), 100, 40, &[2, 3], &mut r).unwrap();
        assert!(s.passed(), "{:?}", s.failures);
        assert_eq!(s.exp_log_round_trips, 100);
    }
}

proptest! {
    #[test]
    fn exp_mod_pn_depends_only_on_input_mod_pn(
        p in prop::sample::select(vec![3u64, 5, 7]),
        n in 1u32..5,
        x in prop::array::uniform4(any::<i32>()),
        y in prop::array::uniform4(any::<i32>()),
    ) {
        let m = md(p, 6);
        let build = |v: [i32; 4], s: u64| {
            MatP::new(m, [[v[0] as i64, v[1] as i64], [v[2] as i64, v[3] as i64]]).scale(s)
        };
        let x = build(x, p);
        let y = build(y, m.p_pow(n));
        prop_assert_eq!(
            exp_congruence_classes(&x.add(&y), n).unwrap(),
            exp_congruence_classes(&x, n).unwrap()
        );
    }

    #[test]
    fn log_exp_round_trip(p in prop::sample::select(vec![2u64, 3, 5, 7]), seed in any::<u64>()) {
        let m = md(p, 5);
        let mut r = rng::seeded(seed);
        let x = sampling::congruence_algebra_element(m, &mut r);
        prop_assert_eq!(log_congruence(&exp_congruence(&x).unwrap()).unwrap(), x);
    }
}
