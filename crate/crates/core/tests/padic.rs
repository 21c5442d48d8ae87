use congruence_core::explog::exp_congruence;
use congruence_core::padic::{
    group_level, principal_congruence_elements, principal_congruence_order, sl2_elements,
    sl2_order, FiniteGroup, MatP, Modulus, DEFAULT_CLOSURE_CAP,
};
use congruence_core::Error;
use num_bigint::BigInt;
use num_integer::Integer;
use proptest::prelude::*;

fn md(p: u64, n: u32) -> Modulus {
    Modulus::new(p, n).unwrap()
}

fn big_mod(x: i128, q: u64) -> u64 {
    let r = BigInt::from(x).mod_floor(&BigInt::from(q));
    u64::try_from(r).unwrap()
}

#[test]
fn rejects_bad_moduli() {
    assert_eq!(Modulus::new(9, 2), Err(Error::NotPrime(9)));
    assert_eq!(Modulus::new(3, 0), Err(Error::ZeroPrecision));
    assert!(matches!(Modulus::new(3, 60), Err(Error::PrecisionOverflow { .. })));
}

#[test]
fn group_orders_match_counting_formulas() {
    for (p, n) in [(2, 2), (3, 2), (5, 1)] {
        let m = md(p, n);
        let all = sl2_elements(m, DEFAULT_CLOSURE_CAP).unwrap();
        // |SL(2, Z/q)| counted from the matrices with ad - bc = 1 directly
        let q = m.value();
        let mut brute = 0u128;
        for key in 0..q.pow(4) {
            let (a, b, c, d) = (key % q, key / q % q, key / q / q % q, key / q / q / q);
            if (a * d + q * q - b * c % (q * q)) % q == 1 % q {
                brute += 1;
            }
        }
        assert_eq!(all.len() as u128, brute);
        assert_eq!(sl2_order(m), brute);
        for k in 1..=n {
            let kk = principal_congruence_elements(m, k, DEFAULT_CLOSURE_CAP).unwrap();
            assert_eq!(kk.len() as u128, principal_congruence_order(m, k));
            assert_eq!(kk.len() as u128, (q / p.pow(k)).pow(3) as u128);
        }
    }
}

#[test]
fn level_of_group_generated_by_root_exponentials() {
    let m = md(3, 3);
    let gens: Vec<MatP> = [[[0, 3], [0, 0]], [[0, 0], [3, 0]], [[3, 0], [0, -3]]]
        .iter()
        .map(|x| exp_congruence(&MatP::new(m, *x)).unwrap())
        .collect();
    let cert = group_level(&gens, m, DEFAULT_CLOSURE_CAP).unwrap();
    assert_eq!(cert.level, Some(1));
    assert_eq!(cert.group_order, 729);
}

#[test]
fn closure_cap_is_enforced() {
    let m = md(5, 2);
    let gens = [MatP::new(m, [[1, 1], [0, 1]]), MatP::new(m, [[1, 0], [1, 1]])];
    let err = FiniteGroup::generated_by(m, &gens, 100).unwrap_err();
    assert!(err.is_budget());
}

proptest! {
    #[test]
    fn arithmetic_agrees_with_bigint(p in prop::sample::select(vec![2u64, 3, 5, 7, 101]), n in 1u32..6, a in any::<i64>(), b in any::<i64>()) {
        let m = md(p, n);
        let q = m.value();
        let (ra, rb) = (big_mod(a as i128, q), big_mod(b as i128, q));
        prop_assert_eq!(m.reduce_signed(a as i128), ra);
        prop_assert_eq!(m.add(ra, rb), big_mod(a as i128 + b as i128, q));
        prop_assert_eq!(m.sub(ra, rb), big_mod(a as i128 - b as i128, q));
        prop_assert_eq!(m.mul(ra, rb), big_mod(a as i128 * b as i128, q));
        if let Some(inv) = m.inv(ra) {
            prop_assert_eq!(m.mul(inv, ra), 1 % q);
        } else {
            prop_assert_eq!(ra % p, 0);
        }
        // valuation: largest k <= n with p^k | a
        let mut k = 0;
        while k < n && ra % p.pow(k + 1) == 0 {
            k += 1;
        }
        prop_assert_eq!(m.val(ra), k);
    }

    #[test]
    fn matrix_inverse_and_determinant(p in prop::sample::select(vec![3u64, 5, 7]), n in 1u32..5, e in prop::array::uniform4(any::<i32>())) {
        let m = md(p, n);
        let x = MatP::new(m, [[e[0] as i64, e[1] as i64], [e[2] as i64, e[3] as i64]]);
        let det = big_mod(e[0] as i128 * e[3] as i128 - e[1] as i128 * e[2] as i128, m.value());
        prop_assert_eq!(x.det(), det);
        match x.inverse() {
            Ok(y) => {
                prop_assert!(x.mul(&y).is_identity());
                prop_assert!(y.mul(&x).is_identity());
            }
            Err(_) => prop_assert_eq!(det % p, 0),
        }
    }
}
