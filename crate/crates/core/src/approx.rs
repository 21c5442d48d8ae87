//! Approximation of Lie subalgebras of `sl(2, Z_p)` by proper isolated
//! subalgebras.
//!
//! Given a subalgebra `M` of level `p^n` with elementary divisors
//! `α_1 <= α_2 <= α_3 = n` and adapted basis `x_1, x_2, x_3`:
//!
//! * if `2 α_2 >= n`, the line `Z_p x_1` works with `m = α_2`;
//! * otherwise the plane `span{x_1, x_2}` is cut out by a primitive functional
//!   `x ↦ tr(cx)`, whose quadric residual `(2c_1)^2 + 4c_2c_3` vanishes modulo
//!   `p^{n - α_1 - α_2}`. Lifting `c` to an exact point of the quadric gives
//!   an isolated subalgebra `J(c)`, and `m = n - α_2`.
//!
//! Functionals are stored through their pairing coefficients on `(e, h, f)`:
//! `tr(cx) = c_3 x_e + 2c_1 x_h + c_2 x_f`, so `φ = (c_3, 2c_1, c_2)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::explog::log_congruence;
use crate::lattice::{self, Coords, LieLattice, DIM, E, F, H};
use crate::padic::{FiniteGroup, MatP, Modulus, PadicScalar};

/// Default `c` in the selection rule, as a fraction.
pub const DEFAULT_C: (u64, u64) = (1, 4);

/// Default cap on the number of candidates scanned by [`optimality_search`].
pub const DEFAULT_CANDIDATE_CAP: u128 = 50_000_000;

/// Result of [`select_r`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Selection {
    pub r: usize,
    pub nu: u64,
    pub c_num: u64,
    pub c_den: u64,
}

/// Largest `r` in `1..d` with `α_r < c α_{r+1}` (0 if none), and
/// `ν = ⌈(1 - 2c) c^{d-r-1} n⌉`.
pub fn select_r(alpha: &[u32], c: (u64, u64)) -> Result<Selection> {
    let (num, den) = c;
    if num == 0 || 2 * num >= den {
        return Err(Error::PreconditionViolation(format!(
            "c = {num}/{den} must lie in (0, 1/2)"
        )));
    }
    let d = alpha.len();
    if d == 0 || alpha.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::PreconditionViolation(format!(
            "divisors {alpha:?} are not ascending"
        )));
    }
    let n = alpha[d - 1] as u128;
    let mut r = 0;
    for i in 1..d {
        if (alpha[i - 1] as u128) * (den as u128) < (num as u128) * (alpha[i] as u128) {
            r = i;
        }
    }
    let e = (d - r - 1) as u32;
    let (num, den) = (num as u128, den as u128);
    let top = (den - 2 * num) * num.pow(e) * n;
    let bottom = den.pow(e + 1);
    let nu = top.div_ceil(bottom) as u64;
    // α_{r+1} >= c^{d-r-1} n
    if (alpha[r] as u128) * den.pow(e) < num.pow(e) * n {
        return Err(Error::Invariant(format!(
            "selection r = {r} violates the divisor chain for {alpha:?}"
        )));
    }
    Ok(Selection {
        r,
        nu,
        c_num: num as u64,
        c_den: den as u64,
    })
}

/// A primitive linear functional on `sl(2)`, i.e. the plane `J(c) = ker φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct AnnihilatorPoint {
    /// pairing coefficients on `(e, h, f)`
    phi: Coords,
    #[serde(skip)]
    modulus: Modulus,
}

impl AnnihilatorPoint {
    /// From a pairing vector; normalized so that the first unit among
    /// `(φ_f, φ_e, φ_h)`, i.e. `(c_2, c_3, 2c_1)`, equals 1.
    pub fn from_functional(modulus: Modulus, phi: Coords) -> Result<Self> {
        let phi = phi.map(|v| modulus.reduce(v));
        for idx in [F, E, H] {
            if modulus.is_unit(phi[idx]) {
                let s = modulus.inv(phi[idx]).unwrap();
                return Ok(AnnihilatorPoint {
                    phi: lattice::scale(modulus, s, &phi),
                    modulus,
                });
            }
        }
        Err(Error::NotSurjective)
    }

    /// From `c = (c_1, c_2, c_3)` describing `[[c_1, c_2], [c_3, -c_1]]`.
    pub fn from_c(modulus: Modulus, c: [i64; 3]) -> Result<Self> {
        let r = |v: i64| modulus.reduce_signed(v as i128);
        let phi = [r(c[2]), modulus.mul(2, r(c[0])), r(c[1])];
        Self::from_functional(modulus, phi)
    }

    pub fn functional(&self) -> Coords {
        self.phi
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    /// `(c_1, c_2, c_3)`; requires `p` odd.
    pub fn c(&self) -> Result<[u64; 3]> {
        let md = self.modulus;
        let half = md.inv(2).ok_or(Error::UnsupportedPrime {
            p: md.p(),
            floor: 3,
        })?;
        Ok([md.mul(self.phi[H], half), self.phi[F], self.phi[E]])
    }

    pub fn pairing(&self, x: &Coords) -> u64 {
        lattice::pair(self.modulus, &self.phi, x)
    }

    /// `(2c_1)^2 + 4 c_2 c_3`.
    pub fn quadric_residual(&self) -> PadicScalar {
        let md = self.modulus;
        let q = md.add(
            md.mul(self.phi[H], self.phi[H]),
            md.mul(4, md.mul(self.phi[E], self.phi[F])),
        );
        PadicScalar::new(md, q as i128)
    }

    /// The plane `J(c)` as a rank-2 isolated lattice.
    pub fn plane(&self) -> LieLattice {
        let md = self.modulus;
        let phi = self.phi;
        // kernel basis using the unit coordinate j: x_i - (φ_i / φ_j) x_j
        let j = [F, E, H]
            .into_iter()
            .find(|&i| md.is_unit(phi[i]))
            .expect("primitive");
        let inv = md.inv(phi[j]).unwrap();
        let gens: Vec<Coords> = (0..DIM)
            .filter(|&i| i != j)
            .map(|i| {
                let mut v = [0u64; DIM];
                v[i] = 1;
                v[j] = md.neg(md.mul(phi[i], inv));
                v
            })
            .collect();
        LieLattice::from_generators(md, &gens).expect("kernel basis")
    }
}

/// Primitive functional vanishing on `x1` and `x2`.
pub fn annihilator_of_plane(modulus: Modulus, x1: &Coords, x2: &Coords) -> Result<AnnihilatorPoint> {
    let phi = lattice::cross(modulus, x1, x2);
    AnnihilatorPoint::from_functional(modulus, phi).map_err(|_| Error::DegenerateSpan)
}

/// Result of [`lift_quadric`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadricLift {
    pub point: AnnihilatorPoint,
    /// exponent `k` with `point ≡ input (mod p^k)`
    pub agreement: u32,
}

/// Lifts a point of the quadric modulo `p^m` to an exact point modulo `p^N`.
///
/// One Newton step on `c_3` (or `c_2`) is exact because the residual is
/// linear in that coordinate. For `p = 2` the agreement drops to `m - 2`.
pub fn lift_quadric(c: &AnnihilatorPoint, m: u32) -> Result<QuadricLift> {
    let md = c.modulus;
    let p = md.p();
    let floor = if p == 2 { 3 } else { 1 };
    if m < floor || m > md.precision() {
        return Err(Error::UnsupportedPrecision(format!(
            "cannot lift from exponent {m} at {md}"
        )));
    }
    let q = c.quadric_residual();
    if q.valuation().value < m {
        return Err(Error::PreconditionViolation(format!(
            "quadric residual {} has valuation {} < {m}",
            q.residue(),
            q.valuation()
        )));
    }
    let phi = c.phi;
    // half of φ_h as an integer: exact for p odd via 2^-1, and for p = 2 the
    // residual condition forces φ_h even
    let c1 = if p == 2 {
        if phi[H] % 2 != 0 {
            return Err(Error::NoUnitDerivative);
        }
        phi[H] / 2
    } else {
        md.mul(phi[H], md.inv(2).unwrap())
    };
    let c1sq = md.mul(c1, c1);
    let mut out = phi;
    if md.is_unit(phi[F]) {
        out[E] = md.neg(md.mul(c1sq, md.inv(phi[F]).unwrap()));
    } else if md.is_unit(phi[E]) {
        out[F] = md.neg(md.mul(c1sq, md.inv(phi[E]).unwrap()));
    } else {
        return Err(Error::NoUnitDerivative);
    }
    let point = AnnihilatorPoint::from_functional(md, out)?;
    debug_assert!(point.quadric_residual().is_zero());
    let agreement = if p == 2 { m - 2 } else { m };
    Ok(QuadricLift { point, agreement })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Rank1,
    Rank2Lifted,
}

/// Output of [`approximate_sl2`].
#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub subalgebra: LieLattice,
    pub m: u32,
    pub branch: Branch,
    pub selection: Selection,
    pub annihilator: Option<AnnihilatorPoint>,
}

/// Options for [`approximate_sl2`].
#[derive(Debug, Clone, Copy)]
pub struct ApproxOptions {
    pub c: (u64, u64),
    /// enables the `p = 2` variant with `m >= ⌈n/2⌉ - 1`
    pub allow_p2: bool,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            c: DEFAULT_C,
            allow_p2: false,
        }
    }
}

/// Guaranteed exponent: `⌈n/2⌉` for odd `p`, `⌈n/2⌉ - 1` for `p = 2`.
pub fn guaranteed_exponent(p: u64, n: u32) -> u32 {
    let half = n.div_ceil(2);
    if p == 2 {
        half.saturating_sub(1)
    } else {
        half
    }
}

/// Finds a proper isolated subalgebra `I` and `m >= ⌈n/2⌉` with
/// `M ⊆ I + p^m sl(2)`, where `p^n` is the level of `M`.
pub fn approximate_sl2(lattice: &LieLattice, options: ApproxOptions) -> Result<ApproxResult> {
    let md = lattice.modulus();
    let p = md.p();
    let big_n = md.precision();
    if p == 2 && !options.allow_p2 {
        return Err(Error::UnsupportedPrime { p, floor: 3 });
    }
    let alpha = lattice.divisors();
    let n = alpha[2];
    if n == 0 || n >= big_n {
        return Err(Error::PreconditionViolation(format!(
            "level exponent {n} must lie in [1, N) at N = {big_n}"
        )));
    }
    if big_n < n + 2 {
        return Err(Error::PreconditionViolation(format!(
            "precision {big_n} leaves no headroom above level {n}"
        )));
    }
    if !lattice.is_subalgebra_mod(big_n - 1)? {
        return Err(Error::Degenerate("input is not a Lie subalgebra".into()));
    }
    let selection = select_r(&alpha, options.c)?;
    let basis = lattice.adapted_basis();
    let (half_ok, m_rank1) = if p == 2 {
        (2 * alpha[1] + 2 >= n, alpha[1])
    } else {
        (2 * alpha[1] >= n, alpha[1])
    };
    let (subalgebra, m, branch, annihilator) = if half_ok {
        let line = LieLattice::from_generators(md, &[basis[0]])?;
        (line, m_rank1, Branch::Rank1, None)
    } else {
        let c = annihilator_of_plane(md, &basis[0], &basis[1])?;
        let m_q = n - alpha[0] - alpha[1];
        let lifted = lift_quadric(&c, m_q)?;
        let m = if p == 2 { n - alpha[1] - 2 } else { n - alpha[1] };
        (lifted.point.plane(), m, Branch::Rank2Lifted, Some(lifted.point))
    };
    if !subalgebra.is_isolated() || subalgebra.rank() >= DIM {
        return Err(Error::Invariant("approximant is not proper and isolated".into()));
    }
    if m < guaranteed_exponent(p, n) {
        return Err(Error::Invariant(format!(
            "exponent {m} below the guaranteed {}",
            guaranteed_exponent(p, n)
        )));
    }
    if !subalgebra.contains_lattice_mod(lattice, m)? {
        return Err(Error::Invariant(format!(
            "M is not contained in I + p^{m} sl(2)"
        )));
    }
    Ok(ApproxResult {
        subalgebra,
        m,
        branch,
        selection,
        annihilator,
    })
}

/// `p^k ker(φ mod p^k) + p^n sl(2)` for `n = 2k`.
pub fn worst_case_subalgebra(modulus: Modulus, n: u32, phi: &AnnihilatorPoint) -> Result<LieLattice> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::PreconditionViolation(format!(
            "worst-case family needs an even positive n, got {n}"
        )));
    }
    if n >= modulus.precision() {
        return Err(Error::PrecisionExceeded {
            requested: n,
            precision: modulus.precision(),
        });
    }
    let phi = AnnihilatorPoint::from_functional(modulus, phi.functional())?;
    let k = n / 2;
    let pk = modulus.p_pow(k);
    let mut gens: Vec<Coords> = phi
        .plane()
        .spanning_set()
        .iter()
        .map(|g| lattice::scale(modulus, pk, g))
        .collect();
    gens.extend(LieLattice::standard(modulus, n).spanning_set());
    LieLattice::from_generators(modulus, &gens)
}

/// Calls `f` on each primitive vector mod `p^m` whose first unit coordinate,
/// in the order given by `positions`, equals 1.
fn canonical_primitive_vectors(
    modulus: Modulus,
    positions: [usize; DIM],
) -> impl ParallelIterator<Item = Coords> {
    let q = modulus.value();
    let p = modulus.p();
    (0..DIM).into_par_iter().flat_map(move |lead| {
        // coordinates before `lead` are non-units, `lead` is 1, the rest arbitrary
        let ranges: Vec<(u64, u64)> = (0..DIM)
            .map(|slot| {
                if slot < lead {
                    (q / p, p)
                } else if slot == lead {
                    (1, 0)
                } else {
                    (q, 1)
                }
            })
            .collect();
        let total = ranges[0].0 * ranges[1].0 * ranges[2].0;
        (0..total).into_par_iter().map(move |mut idx| {
            let mut v = [0u64; DIM];
            for (slot, &(count, step)) in ranges.iter().enumerate() {
                let t = idx % count;
                idx /= count;
                v[positions[slot]] = if step == 0 { 1 } else { t * step };
            }
            v
        })
    })
}

fn primitive_vector_count(modulus: Modulus) -> u128 {
    let q = modulus.value() as u128;
    let p = modulus.p() as u128;
    q * q + q * q / p + q * q / (p * p)
}

/// Whether some proper isolated subalgebra `I` satisfies `M ⊆ I + p^m sl(2)`,
/// by exhausting all lines and all planes on the quadric modulo `p^m`.
pub fn optimality_search(lattice: &LieLattice, m: u32, cap: u128) -> Result<bool> {
    let md = lattice.modulus();
    if md.p() == 2 {
        return Err(Error::UnsupportedPrime { p: 2, floor: 3 });
    }
    if m + 1 > md.precision() {
        return Err(Error::PrecisionExceeded {
            requested: m,
            precision: md.precision(),
        });
    }
    if m == 0 {
        return Ok(true);
    }
    let small = md.with_precision(m)?;
    let required = 2 * primitive_vector_count(small);
    if required > cap {
        return Err(Error::BudgetExceeded { required, cap });
    }
    let gens: Vec<Coords> = lattice
        .spanning_set()
        .iter()
        .map(|g| g.map(|v| small.reduce(v)))
        .collect();
    // lines Z_p v: each generator must be ≡ t v with t read off the unit slot
    let line_hit = canonical_primitive_vectors(small, [E, H, F]).any(|v| {
        let lead = (0..DIM).find(|&i| small.is_unit(v[i])).unwrap();
        gens.iter().all(|g| {
            let t = g[lead];
            (0..DIM).all(|i| small.sub(g[i], small.mul(t, v[i])) == 0)
        })
    });
    if line_hit {
        return Ok(true);
    }
    let plane_hit = canonical_primitive_vectors(small, [F, E, H]).any(|phi| {
        let q = small.add(
            small.mul(phi[H], phi[H]),
            small.mul(4, small.mul(phi[E], phi[F])),
        );
        q == 0 && gens.iter().all(|g| lattice::pair(small, &phi, g) == 0)
    });
    Ok(plane_hit)
}

/// Whether `log h ∈ p I + p^m sl(2)` for every `h` in the closure of `generators`.
pub fn group_certificate(
    generators: &[MatP],
    subalgebra: &LieLattice,
    m: u32,
    closure_cap: usize,
) -> Result<bool> {
    let md = subalgebra.modulus();
    if md.p() == 2 {
        return Err(Error::UnsupportedPrime { p: 2, floor: 3 });
    }
    if m + 1 > md.precision() {
        return Err(Error::PrecisionExceeded {
            requested: m,
            precision: md.precision(),
        });
    }
    for g in generators {
        if !g.in_principal_congruence(1)? {
            return Err(Error::DomainViolation(format!("generator {g} is not ≡ 1 mod p")));
        }
    }
    let target = subalgebra.scaled(1).plus_congruence(m);
    let group = FiniteGroup::generated_by(md, generators, closure_cap)?;
    for h in group.elements() {
        let x = lattice::from_matrix(&log_congruence(h)?)?;
        if !target.contains(&x) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(p: u64, n: u32) -> Modulus {
        Modulus::new(p, n).unwrap()
    }

    #[test]
    fn select_r_examples() {
        let s = select_r(&[0, 0, 4], DEFAULT_C).unwrap();
        assert_eq!((s.r, s.nu), (2, 2));
        let s = select_r(&[2, 2, 2], DEFAULT_C).unwrap();
        assert_eq!((s.r, s.nu), (0, 1));
        let s = select_r(&[0, 1, 3], DEFAULT_C).unwrap();
        assert_eq!((s.r, s.nu), (1, 1));
        assert!(select_r(&[0, 1, 3], (1, 2)).is_err());
    }

    #[test]
    fn annihilator_examples() {
        let m = md(3, 5);
        let borel = annihilator_of_plane(m, &[1, 0, 0], &[0, 1, 0]).unwrap();
        assert_eq!(borel.c().unwrap(), [0, 1, 0]);
        let ef = annihilator_of_plane(m, &[1, 0, 0], &[0, 0, 1]).unwrap();
        let c = ef.c().unwrap();
        assert!(m.is_unit(c[0]) && c[1] == 0 && c[2] == 0);
        assert!(matches!(
            annihilator_of_plane(m, &[1, 0, 0], &[3, 0, 0]),
            Err(Error::DegenerateSpan)
        ));
    }

    #[test]
    fn quadric_examples() {
        let m = md(3, 4);
        let on = AnnihilatorPoint::from_c(m, [1, 1, -1]).unwrap();
        assert!(on.quadric_residual().is_zero());
        let off = AnnihilatorPoint::from_c(m, [1, 0, 0]).unwrap();
        assert_eq!(off.quadric_residual().valuation().value, 0);
        let borel = AnnihilatorPoint::from_c(m, [0, 1, 0]).unwrap();
        assert!(borel.quadric_residual().is_zero());
    }

    #[test]
    fn lift_examples() {
        let m = md(5, 6);
        let c = AnnihilatorPoint::from_c(m, [1, 1, 4]).unwrap();
        let lifted = lift_quadric(&c, 1).unwrap();
        let expected = AnnihilatorPoint::from_c(m, [1, 1, -1]).unwrap();
        assert_eq!(lifted.point, expected);
        let again = lift_quadric(&lifted.point, 6).unwrap();
        assert_eq!(again.point, lifted.point);
    }

    #[test]
    fn borel_plus_deep_f() {
        let m = md(3, 7);
        let lat = LieLattice::from_columns(m, &[[0, 1, 0], [1, 0, 0], [0, 0, 81]]).unwrap();
        assert_eq!(lat.divisors(), [0, 0, 4]);
        let res = approximate_sl2(&lat, ApproxOptions::default()).unwrap();
        assert_eq!(res.branch, Branch::Rank2Lifted);
        assert_eq!(res.m, 4);
        let borel = LieLattice::from_columns(m, &[[0, 1, 0], [1, 0, 0]]).unwrap();
        assert!(res.subalgebra.same_lattice(&borel));
    }

    #[test]
    fn scalar_lattice_takes_rank_one_branch() {
        let m = md(5, 6);
        let lat = LieLattice::standard(m, 3);
        let res = approximate_sl2(&lat, ApproxOptions::default()).unwrap();
        assert_eq!(res.branch, Branch::Rank1);
        assert_eq!(res.m, 3);
        assert!(res.subalgebra.saturate().same_lattice(&res.subalgebra));
    }

    #[test]
    fn worst_case_shapes() {
        let m = md(3, 6);
        let c0 = AnnihilatorPoint::from_c(m, [1, 0, 0]).unwrap();
        let wc = worst_case_subalgebra(m, 4, &c0).unwrap();
        assert_eq!(wc.divisors(), [2, 2, 4]);
        let e_coord = AnnihilatorPoint::from_functional(m, [1, 0, 0]).unwrap();
        let wc = worst_case_subalgebra(m, 4, &e_coord).unwrap();
        assert!(wc.contains(&[0, 9, 0]) && wc.contains(&[0, 0, 9]));
        assert_eq!(wc.level(), 4);
        for p in [3, 5, 7] {
            let m = md(p, 4);
            let phi = AnnihilatorPoint::from_functional(m, [2, 1, 3]).unwrap();
            assert_eq!(worst_case_subalgebra(m, 2, &phi).unwrap().divisors(), [1, 1, 2]);
        }
        assert!(matches!(
            AnnihilatorPoint::from_functional(m, [3, 0, 9]),
            Err(Error::NotSurjective)
        ));
    }

    #[test]
    fn borel_is_its_own_witness() {
        let m = md(3, 5);
        let borel = LieLattice::from_columns(m, &[[0, 1, 0], [1, 0, 0]]).unwrap();
        for k in 1..4 {
            assert!(optimality_search(&borel, k, DEFAULT_CANDIDATE_CAP).unwrap());
        }
    }
}
