//! Random elements of the domains used by the property checks.

use rand::Rng;

use crate::error::Result;
use crate::explog::epsilon_p;
use crate::lattice::{Coords, LieLattice};
use crate::padic::{MatP, Modulus};

pub fn residue<R: Rng>(modulus: Modulus, rng: &mut R) -> u64 {
    rng.gen_range(0..modulus.value())
}

pub fn matrix<R: Rng>(modulus: Modulus, rng: &mut R) -> MatP {
    let key = [
        residue(modulus, rng),
        residue(modulus, rng),
        residue(modulus, rng),
        residue(modulus, rng),
    ];
    MatP::from_key(modulus, key)
}

/// Coordinates `(e, h, f)` of a uniform element of `sl(2, Z/p^N)`.
pub fn coords<R: Rng>(modulus: Modulus, rng: &mut R) -> Coords {
    [
        residue(modulus, rng),
        residue(modulus, rng),
        residue(modulus, rng),
    ]
}

/// Uniform element of `p' gl(2, Z/p^N)`.
pub fn congruence_algebra_element<R: Rng>(modulus: Modulus, rng: &mut R) -> MatP {
    let e = epsilon_p(modulus.p()).min(modulus.precision());
    matrix(modulus, rng).scale(modulus.p_pow(e))
}

/// Uniform element of `Γ(2, p') = 1 + p' gl(2, Z/p^N)`.
pub fn congruence_group_element<R: Rng>(modulus: Modulus, rng: &mut R) -> MatP {
    congruence_algebra_element(modulus, rng).add(&MatP::identity(modulus))
}

/// Random matrix whose reduction mod `p` is nilpotent: `t (u, v)^T (v, -u)`
/// plus a uniform element of `p gl(2)`.
pub fn residually_nilpotent<R: Rng>(modulus: Modulus, rng: &mut R) -> MatP {
    let (u, v, t) = (
        residue(modulus, rng),
        residue(modulus, rng),
        residue(modulus, rng),
    );
    let m = modulus;
    let top = MatP::from_key(
        m,
        [
            m.mul(t, m.mul(u, v)),
            m.neg(m.mul(t, m.mul(u, u))),
            m.mul(t, m.mul(v, v)),
            m.neg(m.mul(t, m.mul(u, v))),
        ],
    );
    let noise = if m.precision() > 1 {
        matrix(m, rng).scale(m.p())
    } else {
        MatP::zero(m)
    };
    top.add(&noise)
}

/// Uniform element of `SL(2, Z/p^N)`.
pub fn sl2<R: Rng>(modulus: Modulus, rng: &mut R) -> MatP {
    let m = modulus;
    loop {
        let a = residue(m, rng);
        let c = residue(m, rng);
        if !m.is_unit(a) && !m.is_unit(c) {
            continue;
        }
        let (b0, d0) = if m.is_unit(a) {
            (0, m.inv(a).unwrap())
        } else {
            (m.neg(m.inv(c).unwrap()), 0)
        };
        let t = residue(m, rng);
        return MatP::from_key(m, [a, m.add(b0, m.mul(t, a)), c, m.add(d0, m.mul(t, c))]);
    }
}

/// Uniform element of the image of `K(p^n)` in `SL(2, Z/p^N)`, `1 <= n <= N`.
pub fn principal_congruence<R: Rng>(modulus: Modulus, n: u32, rng: &mut R) -> MatP {
    let m = modulus;
    if n >= m.precision() {
        return MatP::identity(m);
    }
    let step = m.p_pow(n);
    let count = m.value() / step;
    let a = m.add(1, rng.gen_range(0..count) * step);
    let b = rng.gen_range(0..count) * step;
    let c = rng.gen_range(0..count) * step;
    let d = m.mul(m.add(1, m.mul(b, c)), m.inv(a).unwrap());
    MatP::from_key(m, [a, b, c, d])
}

/// Random subalgebra of level exactly `p^n`: the subalgebra generated by one
/// to three random elements of random depth below `n`, plus `p^n sl(2)`.
pub fn subalgebra_of_level<R: Rng>(modulus: Modulus, n: u32, rng: &mut R) -> Result<LieLattice> {
    let floor = LieLattice::standard(modulus, n).spanning_set();
    loop {
        let count = rng.gen_range(1..=3);
        let mut gens: Vec<Coords> = (0..count)
            .map(|_| {
                let depth = modulus.p_pow(rng.gen_range(0..n));
                coords(modulus, rng).map(|v| modulus.mul(v, depth))
            })
            .collect();
        gens.extend(floor.iter().copied());
        let l = LieLattice::generated_subalgebra(modulus, &gens)?;
        if l.level() == n {
            return Ok(l);
        }
    }
}
