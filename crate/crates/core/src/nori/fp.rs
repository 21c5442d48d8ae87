//! Subgroups of `SL(2, F_p)` generated by unipotents and the Lie subalgebras
//! of `sl(2, F_p)` generated by nilpotents, with the maps between them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::explog::{exp_trunc, log_trunc, EXTENDED_PRIME_FLOOR};
use crate::lattice::{self, Coords, DIM};
use crate::padic::{sl2_elements, Closure, FiniteGroup, MatKey, MatP, Modulus};

/// A subgroup of `SL(2, F_p)` as its sorted element set, with the generators
/// that produced it.
#[derive(Debug, Clone)]
pub struct FpSubgroup {
    group: FiniteGroup,
    generators: Vec<MatP>,
}

impl PartialEq for FpSubgroup {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group
    }
}

impl Eq for FpSubgroup {}

fn field(p: u64) -> Result<Modulus> {
    Modulus::new(p, 1)
}

impl FpSubgroup {
    pub fn generated_by(p: u64, generators: &[MatP], cap: usize) -> Result<Self> {
        let md = field(p)?;
        let mut closure = Closure::new(md, cap);
        let mut kept = Vec::new();
        for g in generators {
            let g = g.lift_to(md);
            if g.det() != 1 {
                return Err(Error::PreconditionViolation(format!("{g} is not in SL(2)")));
            }
            if closure.add_generator(&g)? {
                kept.push(g);
            }
        }
        Ok(FpSubgroup {
            group: closure.into_group(),
            generators: kept,
        })
    }

    pub fn full(p: u64, cap: usize) -> Result<Self> {
        let md = field(p)?;
        let elements = sl2_elements(md, cap)?;
        let e = MatP::new(md, [[1, 1], [0, 1]]);
        let f = MatP::new(md, [[1, 0], [1, 1]]);
        Ok(FpSubgroup {
            group: FiniteGroup::from_elements(md, elements),
            generators: vec![e, f],
        })
    }

    pub fn trivial(p: u64) -> Result<Self> {
        Self::generated_by(p, &[], 1)
    }

    pub fn p(&self) -> u64 {
        self.group.modulus().p()
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    pub fn elements(&self) -> &[MatP] {
        self.group.elements()
    }

    pub fn generators(&self) -> &[MatP] {
        &self.generators
    }

    pub fn contains(&self, g: &MatP) -> bool {
        self.group.contains(g)
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    fn canonical_key(&self) -> Vec<MatKey> {
        self.group.elements().iter().map(|g| g.key()).collect()
    }
}

/// `(x - 1)^2 = 0`.
pub fn is_unipotent(x: &MatP) -> bool {
    let z = x.sub(&MatP::identity(x.modulus()));
    z.mul(&z) == MatP::zero(x.modulus())
}

pub fn unipotent_elements(h: &FpSubgroup) -> Vec<MatP> {
    h.elements().iter().copied().filter(is_unipotent).collect()
}

/// Subgroup generated by the unipotent elements.
pub fn h_plus(h: &FpSubgroup, cap: usize) -> Result<FpSubgroup> {
    let plus = FpSubgroup::generated_by(h.p(), &unipotent_elements(h), cap)?;
    if (h.order() / plus.order()) as u64 % h.p() == 0 || h.order() % plus.order() != 0 {
        return Err(Error::Invariant(format!(
            "[H : H+] = {} / {} is divisible by p",
            h.order(),
            plus.order()
        )));
    }
    Ok(plus)
}

/// A subspace of `sl(2, F_p)` in reduced row echelon form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FpLieSubalgebra {
    p: u64,
    basis: Vec<Coords>,
}

impl FpLieSubalgebra {
    /// Row-reduced span of `vectors`; closure under the bracket is not checked.
    pub fn span(p: u64, vectors: &[Coords]) -> Result<Self> {
        let md = field(p)?;
        let mut rows: Vec<Coords> = vectors.iter().map(|v| v.map(|x| x % p)).collect();
        let mut basis: Vec<Coords> = Vec::new();
        let mut col = 0;
        while col < DIM && !rows.is_empty() {
            if let Some(pos) = rows.iter().position(|r| r[col] != 0) {
                let mut pivot = rows.swap_remove(pos);
                let inv = md.inv(pivot[col]).unwrap();
                pivot = lattice::scale(md, inv, &pivot);
                for r in rows.iter_mut().chain(basis.iter_mut()) {
                    let factor = r[col];
                    if factor != 0 {
                        for k in 0..DIM {
                            r[k] = md.sub(r[k], md.mul(factor, pivot[k]));
                        }
                    }
                }
                basis.push(pivot);
                rows.retain(|r| r.iter().any(|&x| x != 0));
            }
            col += 1;
        }
        basis.sort_by(|a, b| b.cmp(a));
        Ok(FpLieSubalgebra { p, basis })
    }

    /// Smallest subalgebra containing `vectors`.
    pub fn generated_by(p: u64, vectors: &[Coords]) -> Result<Self> {
        let md = field(p)?;
        let mut current = Self::span(p, vectors)?;
        loop {
            let mut vs = current.basis.clone();
            for i in 0..current.basis.len() {
                for j in (i + 1)..current.basis.len() {
                    vs.push(lattice::bracket(md, &current.basis[i], &current.basis[j]));
                }
            }
            let next = Self::span(p, &vs)?;
            if next.dim() == current.dim() {
                return Ok(current);
            }
            current = next;
        }
    }

    pub fn zero(p: u64) -> Self {
        FpLieSubalgebra {
            p,
            basis: Vec::new(),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Coords] {
        &self.basis
    }

    pub fn contains(&self, v: &Coords) -> bool {
        let mut vs = self.basis.clone();
        vs.push(*v);
        Self::span(self.p, &vs).map(|s| s.dim() == self.dim()).unwrap_or(false)
    }

    pub fn is_closed(&self) -> bool {
        let md = field(self.p).expect("prime");
        self.basis.iter().enumerate().all(|(i, x)| {
            self.basis
                .iter()
                .skip(i + 1)
                .all(|y| self.contains(&lattice::bracket(md, x, y)))
        })
    }

    pub fn elements(&self) -> Vec<Coords> {
        let md = field(self.p).expect("prime");
        let mut out = vec![[0u64; DIM]];
        for b in &self.basis {
            let mut next = Vec::with_capacity(out.len() * self.p as usize);
            for v in &out {
                for t in 0..self.p {
                    next.push(lattice::add(md, v, &lattice::scale(md, t, b)));
                }
            }
            out = next;
        }
        out
    }

    /// Elements `y` with `y^2 = 0`, i.e. `h^2 + ef = 0`.
    pub fn nilpotent_elements(&self) -> Vec<Coords> {
        let md = field(self.p).expect("prime");
        self.elements()
            .into_iter()
            .filter(|v| md.add(md.mul(v[1], v[1]), md.mul(v[0], v[2])) == 0)
            .collect()
    }
}

fn require_floor(p: u64) -> Result<()> {
    if p < EXTENDED_PRIME_FLOOR {
        return Err(Error::UnsupportedPrime {
            p,
            floor: EXTENDED_PRIME_FLOOR,
        });
    }
    Ok(())
}

/// Span of `log^(p)` of the unipotent elements; errors if it is not closed
/// under the bracket.
pub fn liec_bar(h: &FpSubgroup) -> Result<FpLieSubalgebra> {
    let p = h.p();
    require_floor(p)?;
    let mut logs = Vec::new();
    for u in unipotent_elements(h) {
        logs.push(lattice::from_matrix(&log_trunc(&u)?)?);
    }
    let l = FpLieSubalgebra::span(p, &logs)?;
    if !l.is_closed() {
        return Err(Error::BracketClosureAnomaly(format!(
            "p = {p}, |H| = {}, span of dimension {}",
            h.order(),
            l.dim()
        )));
    }
    Ok(l)
}

/// Subgroup generated by `exp^(p)` of the nilpotent elements.
pub fn grpc_bar(l: &FpLieSubalgebra, cap: usize) -> Result<FpSubgroup> {
    let p = l.p();
    require_floor(p)?;
    let md = field(p)?;
    let mut gens = Vec::new();
    for y in l.nilpotent_elements() {
        gens.push(exp_trunc(&lattice::to_matrix(md, &y))?);
    }
    FpSubgroup::generated_by(p, &gens, cap)
}

/// All subgroups `H` of `SL(2, F_p)` with `H+ = H`: the joins of the cyclic
/// groups generated by single unipotents, closed under pairwise joins.
pub fn enumerate_unipotent_generated(p: u64, cap: usize) -> Result<Vec<FpSubgroup>> {
    let full = FpSubgroup::full(p, cap)?;
    let mut found: BTreeMap<Vec<MatKey>, FpSubgroup> = BTreeMap::new();
    let trivial = FpSubgroup::trivial(p)?;
    found.insert(trivial.canonical_key(), trivial);
    for u in unipotent_elements(&full) {
        if u.is_identity() {
            continue;
        }
        let g = FpSubgroup::generated_by(p, &[u], cap)?;
        found.entry(g.canonical_key()).or_insert(g);
    }
    loop {
        let current: Vec<FpSubgroup> = found.values().cloned().collect();
        let mut added = false;
        for (i, a) in current.iter().enumerate() {
            for b in current.iter().skip(i + 1) {
                if b.generators().iter().all(|g| a.contains(g))
                    || a.generators().iter().all(|g| b.contains(g))
                {
                    continue;
                }
                let mut gens = a.generators().to_vec();
                gens.extend_from_slice(b.generators());
                let join = FpSubgroup::generated_by(p, &gens, cap)?;
                let key = join.canonical_key();
                if let std::collections::btree_map::Entry::Vacant(slot) = found.entry(key) {
                    slot.insert(join);
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }
    let mut out: Vec<FpSubgroup> = found.into_values().collect();
    out.sort_by_key(|g| (g.order(), g.canonical_key()));
    Ok(out)
}

/// All subalgebras of `sl(2, F_p)` generated by nilpotent elements.
pub fn enumerate_nilpotently_generated(p: u64) -> Result<Vec<FpLieSubalgebra>> {
    let full = FpLieSubalgebra::span(p, &[[1, 0, 0], [0, 1, 0], [0, 0, 1]])?;
    let mut found: std::collections::BTreeSet<FpLieSubalgebra> = std::collections::BTreeSet::new();
    found.insert(FpLieSubalgebra::zero(p));
    for y in full.nilpotent_elements() {
        if y != [0, 0, 0] {
            found.insert(FpLieSubalgebra::span(p, &[y])?);
        }
    }
    loop {
        let current: Vec<FpLieSubalgebra> = found.iter().cloned().collect();
        let mut added = false;
        for (i, a) in current.iter().enumerate() {
            for b in current.iter().skip(i + 1) {
                let mut vs = a.basis().to_vec();
                vs.extend_from_slice(b.basis());
                let join = FpLieSubalgebra::generated_by(p, &vs)?;
                added |= found.insert(join);
            }
        }
        if !added {
            break;
        }
    }
    let mut out: Vec<FpLieSubalgebra> = found.into_iter().collect();
    out.sort_by_key(|l| (l.dim(), l.clone()));
    Ok(out)
}

/// Outcome of [`roundtrip_check_fp`].
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct FpRoundTrip {
    pub p: u64,
    pub subgroup_count: usize,
    pub algebra_count: usize,
    /// count predicted by the classification: trivial, the `p + 1` Sylow
    /// subgroups, and `SL(2, F_p)`; same shape for the subalgebras
    pub classification_count: usize,
    pub h_plus_checks: usize,
    pub failures: Vec<String>,
}

impl FpRoundTrip {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `grpc ∘ liec = id` on unipotent-generated subgroups,
/// `liec ∘ grpc = id` on nilpotently generated subalgebras, and
/// `liec(H) = liec(H+)` on the cyclic subgroups of `SL(2, F_p)`.
pub fn roundtrip_check_fp(p: u64, cap: usize) -> Result<FpRoundTrip> {
    require_floor(p)?;
    let subgroups = enumerate_unipotent_generated(p, cap)?;
    let algebras = enumerate_nilpotently_generated(p)?;
    let mut failures = Vec::new();
    for h in &subgroups {
        match liec_bar(h) {
            Ok(l) => {
                let back = grpc_bar(&l, cap)?;
                if back != *h {
                    failures.push(format!(
                        "grpc(liec(H)) has order {} for |H| = {}",
                        back.order(),
                        h.order()
                    ));
                }
            }
            Err(Error::BracketClosureAnomaly(msg)) => failures.push(msg),
            Err(e) => return Err(e),
        }
    }
    for l in &algebras {
        let g = grpc_bar(l, cap)?;
        match liec_bar(&g) {
            Ok(back) if back == *l => {}
            Ok(back) => failures.push(format!(
                "liec(grpc(L)) has dimension {} for dim L = {}",
                back.dim(),
                l.dim()
            )),
            Err(Error::BracketClosureAnomaly(msg)) => failures.push(msg),
            Err(e) => return Err(e),
        }
    }
    let full = FpSubgroup::full(p, cap)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut h_plus_checks = 0;
    for g in full.elements() {
        let cyclic = FpSubgroup::generated_by(p, &[*g], cap)?;
        if !seen.insert(cyclic.canonical_key()) {
            continue;
        }
        let plus = h_plus(&cyclic, cap)?;
        if liec_bar(&cyclic)? != liec_bar(&plus)? {
            failures.push(format!("liec(H) differs from liec(H+) for <{g}>"));
        }
        h_plus_checks += 1;
    }
    Ok(FpRoundTrip {
        p,
        subgroup_count: subgroups.len(),
        algebra_count: algebras.len(),
        classification_count: p as usize + 3,
        h_plus_checks,
        failures,
    })
}
