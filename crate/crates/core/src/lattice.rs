//! Lattices in `sl(2)` over `Z/p^N`, in coordinates on the basis `(e, h, f)`.
//!
//! A [`LieLattice`] is the `Z_p`-span of a list of generators. Its Smith form
//! is computed once at construction: an adapted basis `x_1, x_2, x_3` of the
//! ambient lattice and exponents `α_1 <= α_2 <= α_3` such that the vectors
//! `p^{α_i} x_i` span the lattice. A missing direction (rank deficiency) is
//! recorded as `α_i = N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{MatP, Modulus};

/// Coordinates `(e, h, f)` of an element of `sl(2, Z/p^N)`.
pub type Coords = [u64; 3];

pub const DIM: usize = 3;

/// Index of each basis vector in [`Coords`].
pub const E: usize = 0;
pub const H: usize = 1;
pub const F: usize = 2;

/// Bracket table `[x_i, x_j] = sum_k c_ijk x_k` on the ordered basis `(e, h, f)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureConstants {
    pub c: [[[i64; DIM]; DIM]; DIM],
}

impl StructureConstants {
    /// `[h, e] = 2e`, `[h, f] = -2f`, `[e, f] = h`.
    pub fn sl2() -> Self {
        let mut c = [[[0i64; DIM]; DIM]; DIM];
        c[H][E][E] = 2;
        c[E][H][E] = -2;
        c[H][F][F] = -2;
        c[F][H][F] = 2;
        c[E][F][H] = 1;
        c[F][E][H] = -1;
        StructureConstants { c }
    }

    /// Checks antisymmetry and the Jacobi identity on basis triples.
    pub fn check(&self) -> Result<()> {
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    if self.c[i][j][k] != -self.c[j][i][k] {
                        return Err(Error::Invariant(format!(
                            "bracket table not antisymmetric at ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        // [x_i, [x_j, x_k]] + cyclic = 0
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for out in 0..DIM {
                        let mut total = 0;
                        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                            for l in 0..DIM {
                                total += self.c[b][c][l] * self.c[a][l][out];
                            }
                        }
                        if total != 0 {
                            return Err(Error::Invariant(format!(
                                "Jacobi identity fails on ({i},{j},{k})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// `[x, y]` in coordinates.
pub fn bracket(modulus: Modulus, x: &Coords, y: &Coords) -> Coords {
    let table = StructureConstants::sl2();
    let mut out = [0u64; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            let xy = modulus.mul(x[i], y[j]);
            if xy == 0 {
                continue;
            }
            for (k, slot) in out.iter_mut().enumerate() {
                let c = table.c[i][j][k];
                if c != 0 {
                    let term = modulus.mul(xy, modulus.reduce_signed(c as i128));
                    *slot = modulus.add(*slot, term);
                }
            }
        }
    }
    out
}

/// The matrix `[[h, e], [f, -h]]`.
pub fn to_matrix(modulus: Modulus, x: &Coords) -> MatP {
    MatP::from_key(modulus, [x[H], x[E], x[F], modulus.neg(x[H])])
}

/// Coordinates of a traceless matrix.
pub fn from_matrix(x: &MatP) -> Result<Coords> {
    if x.trace() != 0 {
        return Err(Error::DomainViolation(format!("{x} is not traceless")));
    }
    Ok([x.get(0, 1), x.get(0, 0), x.get(1, 0)])
}

pub fn scale(modulus: Modulus, s: u64, x: &Coords) -> Coords {
    x.map(|v| modulus.mul(s, v))
}

pub fn add(modulus: Modulus, x: &Coords, y: &Coords) -> Coords {
    [
        modulus.add(x[0], y[0]),
        modulus.add(x[1], y[1]),
        modulus.add(x[2], y[2]),
    ]
}

pub fn min_valuation(modulus: Modulus, x: &Coords) -> u32 {
    x.iter().map(|&v| modulus.val(v)).min().unwrap()
}

/// Pairing `φ(x) = sum φ_i x_i`.
pub fn pair(modulus: Modulus, phi: &Coords, x: &Coords) -> u64 {
    (0..DIM).fold(0, |acc, i| modulus.add(acc, modulus.mul(phi[i], x[i])))
}

/// Cross product; annihilates both arguments under [`pair`].
pub fn cross(modulus: Modulus, x: &Coords, y: &Coords) -> Coords {
    let m = modulus;
    [
        m.sub(m.mul(x[1], y[2]), m.mul(x[2], y[1])),
        m.sub(m.mul(x[2], y[0]), m.mul(x[0], y[2])),
        m.sub(m.mul(x[0], y[1]), m.mul(x[1], y[0])),
    ]
}

type Mat3 = [[u64; DIM]; DIM];

fn identity3() -> Mat3 {
    let mut m = [[0; DIM]; DIM];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1;
    }
    m
}

fn det3(md: Modulus, a: &Mat3) -> u64 {
    let minor = |r1: usize, r2: usize, c1: usize, c2: usize| {
        md.sub(md.mul(a[r1][c1], a[r2][c2]), md.mul(a[r1][c2], a[r2][c1]))
    };
    let t0 = md.mul(a[0][0], minor(1, 2, 1, 2));
    let t1 = md.mul(a[0][1], minor(1, 2, 0, 2));
    let t2 = md.mul(a[0][2], minor(1, 2, 0, 1));
    md.add(md.sub(t0, t1), t2)
}

/// JSON form `{"p":…, "N":…, "columns":[[e,h,f], …]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeLiteral {
    pub p: u64,
    #[serde(rename = "N")]
    pub precision: u32,
    pub columns: Vec<[i64; DIM]>,
}

/// A `Z_p`-submodule of `sl(2, Z_p)` known modulo `p^N`, with its Smith form.
#[derive(Debug, Clone)]
pub struct LieLattice {
    modulus: Modulus,
    generators: Vec<Coords>,
    divisors: [u32; DIM],
    /// columns `x_1, x_2, x_3` of a unimodular matrix
    adapted: [Coords; DIM],
    /// inverse of the adapted basis matrix, row-major
    adapted_inv: Mat3,
}

/// Output of [`smith_form`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    pub divisors: [u32; DIM],
    pub adapted_basis: [Coords; DIM],
    adapted_inv: Mat3,
}

/// Smith reduction of the `3 x k` matrix whose columns are `generators`.
///
/// Pivots are entries of least valuation, ties broken by `(row, column)`.
pub fn smith_form(modulus: Modulus, generators: &[Coords]) -> Result<SmithForm> {
    let md = modulus;
    let big_n = md.precision();
    let k = generators.len();
    // a[row][col]
    let mut a: Vec<Vec<u64>> = (0..DIM)
        .map(|r| generators.iter().map(|g| md.reduce(g[r])).collect())
        .collect();
    let mut u = identity3();
    let mut u_inv = identity3();
    let mut divisors = [big_n; DIM];
    for t in 0..DIM.min(k) {
        let mut best: Option<(u32, usize, usize)> = None;
        for (r, row) in a.iter().enumerate().skip(t) {
            for (c, &val) in row.iter().enumerate().skip(t) {
                let v = md.val(val);
                if v < big_n && best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, r, c));
                }
            }
        }
        let Some((v, r, c)) = best else { break };
        // row swap r <-> t: A <- E A, U <- U E^-1 (swap columns), U^-1 <- E U^-1
        if r != t {
            a.swap(r, t);
            for row in u.iter_mut() {
                row.swap(r, t);
            }
            u_inv.swap(r, t);
        }
        if c != t {
            for row in a.iter_mut() {
                row.swap(c, t);
            }
        }
        let (_, unit) = md.split(a[t][t]);
        let unit_inv = md.inv(unit).ok_or_else(|| {
            Error::PrecisionExhausted(format!("pivot {} has no unit part", a[t][t]))
        })?;
        // scale row t by unit^-1 so the pivot becomes p^v
        for val in a[t].iter_mut() {
            *val = md.mul(*val, unit_inv);
        }
        for row in u.iter_mut() {
            row[t] = md.mul(row[t], unit);
        }
        for val in u_inv[t].iter_mut() {
            *val = md.mul(*val, unit_inv);
        }
        // clear column t below the pivot
        for r2 in (t + 1)..DIM {
            if a[r2][t] == 0 {
                continue;
            }
            let factor = md.div_p_pow(a[r2][t], v)?;
            for c2 in 0..k {
                let sub = md.mul(factor, a[t][c2]);
                a[r2][c2] = md.sub(a[r2][c2], sub);
            }
            // E adds -factor * row t to row r2; E^-1 adds +factor: U col t += factor * U col r2
            for row in u.iter_mut() {
                row[t] = md.add(row[t], md.mul(factor, row[r2]));
            }
            for c2 in 0..DIM {
                let sub = md.mul(factor, u_inv[t][c2]);
                u_inv[r2][c2] = md.sub(u_inv[r2][c2], sub);
            }
        }
        // clear row t right of the pivot (column operations, not tracked in U)
        for c2 in (t + 1)..k {
            if a[t][c2] == 0 {
                continue;
            }
            let factor = md.div_p_pow(a[t][c2], v)?;
            for row in a.iter_mut() {
                let sub = md.mul(factor, row[t]);
                row[c2] = md.sub(row[c2], sub);
            }
        }
        divisors[t] = v;
    }
    let mut adapted = [[0u64; DIM]; DIM];
    for (i, col) in adapted.iter_mut().enumerate() {
        for (r, slot) in col.iter_mut().enumerate() {
            *slot = u[r][i];
        }
    }
    if !md.is_unit(det3(md, &u)) {
        return Err(Error::Invariant("adapted basis is not unimodular".into()));
    }
    debug_assert!(divisors.windows(2).all(|w| w[0] <= w[1]));
    Ok(SmithForm {
        divisors,
        adapted_basis: adapted,
        adapted_inv: u_inv,
    })
}

impl LieLattice {
    /// Span of an arbitrary generator list (rank deficiency allowed).
    pub fn from_generators(modulus: Modulus, generators: &[Coords]) -> Result<Self> {
        let generators: Vec<Coords> = generators
            .iter()
            .map(|g| g.map(|v| modulus.reduce(v)))
            .collect();
        let sf = smith_form(modulus, &generators)?;
        Ok(LieLattice {
            modulus,
            generators,
            divisors: sf.divisors,
            adapted: sf.adapted_basis,
            adapted_inv: sf.adapted_inv,
        })
    }

    /// Full-rank lattice; every elementary divisor must be below `N`.
    pub fn full_rank(modulus: Modulus, generators: &[Coords]) -> Result<Self> {
        let l = Self::from_generators(modulus, generators)?;
        if l.rank() < DIM {
            return Err(Error::PrecisionExhausted(format!(
                "generators span a lattice of rank {} at precision {}",
                l.rank(),
                modulus.precision()
            )));
        }
        Ok(l)
    }

    /// Integer columns in `(e, h, f)` coordinates, reduced mod `p^N`.
    pub fn from_columns(modulus: Modulus, columns: &[[i64; DIM]]) -> Result<Self> {
        let gens: Vec<Coords> = columns
            .iter()
            .map(|c| c.map(|v| modulus.reduce_signed(v as i128)))
            .collect();
        Self::from_generators(modulus, &gens)
    }

    pub fn from_literal(lit: &LatticeLiteral) -> Result<Self> {
        let modulus = Modulus::new(lit.p, lit.precision)?;
        let mut gens = Vec::with_capacity(lit.columns.len());
        for col in &lit.columns {
            let mut g = [0u64; DIM];
            for (slot, &v) in g.iter_mut().zip(col.iter()) {
                *slot = modulus.residue_of(v as i128, true)?;
            }
            gens.push(g);
        }
        Self::from_generators(modulus, &gens)
    }

    pub fn to_literal(&self) -> LatticeLiteral {
        LatticeLiteral {
            p: self.modulus.p(),
            precision: self.modulus.precision(),
            columns: self
                .spanning_set()
                .iter()
                .map(|g| g.map(|v| v as i64))
                .collect(),
        }
    }

    /// `p^k sl(2)`; `k = N` gives the zero lattice.
    pub fn standard(modulus: Modulus, k: u32) -> Self {
        let s = modulus.reduce(modulus.p().pow(k.min(modulus.precision())));
        let gens = [[s, 0, 0], [0, s, 0], [0, 0, s]];
        Self::from_generators(modulus, &gens).expect("diagonal lattice")
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn generators(&self) -> &[Coords] {
        &self.generators
    }

    pub fn divisors(&self) -> [u32; DIM] {
        self.divisors
    }

    pub fn adapted_basis(&self) -> [Coords; DIM] {
        self.adapted
    }

    /// Number of elementary divisors below `N`.
    pub fn rank(&self) -> usize {
        self.divisors
            .iter()
            .filter(|&&a| a < self.modulus.precision())
            .count()
    }

    /// `α_d`: least `n` with `p^n sl(2) ⊆ L` (equal to `N` when there is none).
    pub fn level(&self) -> u32 {
        self.divisors[DIM - 1]
    }

    /// The vectors `p^{α_i} x_i` for the directions present.
    pub fn spanning_set(&self) -> Vec<Coords> {
        let md = self.modulus;
        (0..DIM)
            .filter(|&i| self.divisors[i] < md.precision())
            .map(|i| scale(md, md.p_pow(self.divisors[i]), &self.adapted[i]))
            .collect()
    }

    fn adapted_coords(&self, v: &Coords) -> Coords {
        let md = self.modulus;
        let mut w = [0u64; DIM];
        for (i, slot) in w.iter_mut().enumerate() {
            *slot = (0..DIM).fold(0, |acc, j| {
                md.add(acc, md.mul(self.adapted_inv[i][j], md.reduce(v[j])))
            });
        }
        w
    }

    /// Whether `v ∈ L + p^m sl(2)`.
    pub fn membership_mod(&self, v: &Coords, m: u32) -> Result<bool> {
        let md = self.modulus;
        if m > md.precision() {
            return Err(Error::PrecisionExceeded {
                requested: m,
                precision: md.precision(),
            });
        }
        let w = self.adapted_coords(v);
        Ok((0..DIM).all(|i| md.val(w[i]) >= self.divisors[i].min(m)))
    }

    pub fn contains(&self, v: &Coords) -> bool {
        self.membership_mod(v, self.modulus.precision())
            .expect("m = N is allowed")
    }

    /// Whether `other ⊆ self + p^m sl(2)`.
    pub fn contains_lattice_mod(&self, other: &LieLattice, m: u32) -> Result<bool> {
        for g in other.spanning_set() {
            if !self.membership_mod(&g, m)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_sublattice_of(&self, other: &LieLattice) -> bool {
        other
            .contains_lattice_mod(self, self.modulus.precision())
            .expect("m = N is allowed")
    }

    /// Equality of the underlying submodules of `sl(2, Z/p^N)`.
    pub fn same_lattice(&self, other: &LieLattice) -> bool {
        self.modulus == other.modulus && self.is_sublattice_of(other) && other.is_sublattice_of(self)
    }

    /// The isolated hull: span of the adapted vectors for the directions present.
    pub fn saturate(&self) -> LieLattice {
        let gens: Vec<Coords> = (0..DIM)
            .filter(|&i| self.divisors[i] < self.modulus.precision())
            .map(|i| self.adapted[i])
            .collect();
        LieLattice::from_generators(self.modulus, &gens).expect("unimodular columns")
    }

    pub fn is_isolated(&self) -> bool {
        self.divisors
            .iter()
            .all(|&a| a == 0 || a == self.modulus.precision())
    }

    /// `log_p [saturate(L) : L]`.
    pub fn saturation_index_exponent(&self) -> u32 {
        self.divisors
            .iter()
            .filter(|&&a| a < self.modulus.precision())
            .sum()
    }

    /// `p^k L`.
    pub fn scaled(&self, k: u32) -> LieLattice {
        let s = self.modulus.p_pow(k.min(self.modulus.precision()));
        let s = self.modulus.reduce(s);
        let gens: Vec<Coords> = self
            .spanning_set()
            .iter()
            .map(|g| scale(self.modulus, s, g))
            .collect();
        LieLattice::from_generators(self.modulus, &gens).expect("scaled lattice")
    }

    /// `L + p^k sl(2)`.
    pub fn plus_congruence(&self, k: u32) -> LieLattice {
        let mut gens = self.spanning_set();
        gens.extend(LieLattice::standard(self.modulus, k).spanning_set());
        LieLattice::from_generators(self.modulus, &gens).expect("sum of lattices")
    }

    /// Smallest subalgebra of `sl(2, Z/p^N)` containing `generators`.
    pub fn generated_subalgebra(modulus: Modulus, generators: &[Coords]) -> Result<LieLattice> {
        let mut l = LieLattice::from_generators(modulus, generators)?;
        loop {
            let mut gens = l.spanning_set();
            let base = gens.clone();
            for (i, x) in base.iter().enumerate() {
                for y in base.iter().skip(i + 1) {
                    gens.push(bracket(modulus, x, y));
                }
            }
            let next = LieLattice::from_generators(modulus, &gens)?;
            if next.same_lattice(&l) {
                return Ok(l);
            }
            l = next;
        }
    }

    /// Whether all brackets of generators lie in `L + p^ν sl(2)`.
    pub fn is_subalgebra_mod(&self, nu: u32) -> Result<bool> {
        if nu + 1 > self.modulus.precision() {
            return Err(Error::PrecisionExceeded {
                requested: nu,
                precision: self.modulus.precision(),
            });
        }
        let gens = self.spanning_set();
        for (i, x) in gens.iter().enumerate() {
            for y in gens.iter().skip(i + 1) {
                if !self.membership_mod(&bracket(self.modulus, x, y), nu)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Every element of `L mod p^N`, provided there are at most `cap`.
    pub fn elements(&self, cap: usize) -> Result<Vec<Coords>> {
        let md = self.modulus;
        let big_n = md.precision();
        let counts: Vec<u64> = (0..DIM)
            .map(|i| md.p().pow(big_n - self.divisors[i].min(big_n)))
            .collect();
        let total: u128 = counts.iter().map(|&c| c as u128).product();
        if total > cap as u128 {
            return Err(Error::BudgetExceeded {
                required: total,
                cap: cap as u128,
            });
        }
        let gens: Vec<Coords> = (0..DIM)
            .map(|i| scale(md, md.reduce(md.p().pow(self.divisors[i].min(big_n))), &self.adapted[i]))
            .collect();
        let mut out = Vec::with_capacity(total as usize);
        for t0 in 0..counts[0] {
            let v0 = scale(md, t0, &gens[0]);
            for t1 in 0..counts[1] {
                let v1 = add(md, &v0, &scale(md, t1, &gens[1]));
                for t2 in 0..counts[2] {
                    out.push(add(md, &v1, &scale(md, t2, &gens[2])));
                }
            }
        }
        Ok(out)
    }

    /// Reduction of the spanning set to precision `m`.
    pub fn reduce_to(&self, m: u32) -> Result<LieLattice> {
        let target = self.modulus.with_precision(m)?;
        let gens: Vec<Coords> = self
            .spanning_set()
            .iter()
            .map(|g| g.map(|v| target.reduce(v)))
            .collect();
        LieLattice::from_generators(target, &gens)
    }
}
