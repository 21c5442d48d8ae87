//! Exact zero counts of integer polynomials modulo prime powers, on affine
//! space and on `SL(2, F_p)`, with the explicit upper bounds they are
//! compared against.
//!
//! Bounds with a fractional power of `p` are compared after raising both
//! sides to the `d`-th power, so every comparison is an integer inequality.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Pow};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::is_prime;

/// Default cap on the number of points or lifting nodes visited.
pub const DEFAULT_COUNT_BUDGET: u128 = 10_000_000;

/// Largest prime accepted by [`count_mod_p_on_sl2`].
pub const SL2_PRIME_CAP: u64 = 101;

/// Sparse polynomial with integer coefficients: exponent vector to coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct IntPolynomial {
    vars: usize,
    terms: BTreeMap<Vec<u32>, i64>,
}

fn overflow(what: &str) -> Error {
    Error::Parse(format!("coefficient overflow in {what}"))
}

impl IntPolynomial {
    pub fn zero(vars: usize) -> Self {
        IntPolynomial {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: usize, c: i64) -> Self {
        let mut out = Self::zero(vars);
        out.add_term(vec![0; vars], c).expect("single term");
        out
    }

    pub fn variable(vars: usize, index: usize) -> Self {
        assert!(index < vars, "variable x{index} outside {vars} variables");
        let mut exps = vec![0; vars];
        exps[index] = 1;
        let mut out = Self::zero(vars);
        out.add_term(exps, 1).expect("single term");
        out
    }

    /// Builds a polynomial from `(coefficient, exponents)` pairs.
    pub fn from_terms(vars: usize, terms: &[(i64, Vec<u32>)]) -> Result<Self> {
        let mut out = Self::zero(vars);
        for (c, e) in terms {
            if e.len() != vars {
                return Err(Error::Parse(format!(
                    "exponent vector {e:?} has the wrong length for {vars} variables"
                )));
            }
            out.add_term(e.clone(), *c)?;
        }
        Ok(out)
    }

    fn add_term(&mut self, exps: Vec<u32>, c: i64) -> Result<()> {
        if c == 0 {
            return Ok(());
        }
        let slot = self.terms.entry(exps).or_insert(0);
        *slot = slot.checked_add(c).ok_or_else(|| overflow("addition"))?;
        if *slot == 0 {
            self.terms.retain(|_, v| *v != 0);
        }
        Ok(())
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], i64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Same polynomial viewed in `vars >= self.vars()` variables.
    pub fn with_vars(&self, vars: usize) -> Result<Self> {
        if vars < self.vars {
            return Err(Error::PreconditionViolation(format!(
                "cannot drop from {} to {vars} variables",
                self.vars
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, &c)| {
                let mut e = e.clone();
                e.resize(vars, 0);
                (e, c)
            })
            .collect();
        Ok(IntPolynomial { vars, terms })
    }

    fn combine(&self, other: &Self, sign: i64) -> Result<Self> {
        let vars = self.vars.max(other.vars);
        let mut out = self.with_vars(vars)?;
        for (e, &c) in &other.with_vars(vars)?.terms {
            out.add_term(e.clone(), c.checked_mul(sign).ok_or_else(|| overflow("negation"))?)?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let vars = self.vars.max(other.vars);
        let (a, b) = (self.with_vars(vars)?, other.with_vars(vars)?);
        let mut out = Self::zero(vars);
        for (ea, &ca) in &a.terms {
            for (eb, &cb) in &b.terms {
                let e = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca.checked_mul(cb).ok_or_else(|| overflow("product"))?)?;
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut out = Self::constant(self.vars, 1);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Total degree; 0 for constants and for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Total degree ignoring monomials whose coefficient vanishes mod `p`.
    pub fn degree_mod_p(&self, p: u64) -> u32 {
        self.terms
            .iter()
            .filter(|(_, &c)| c.rem_euclid(p as i64) != 0)
            .map(|(e, _)| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero_mod(&self, p: u64) -> bool {
        self.terms.values().all(|&c| c.rem_euclid(p as i64) == 0)
    }

    /// Compiles the polynomial for repeated evaluation modulo `q`.
    pub fn compile(&self, q: u64) -> Compiled {
        let max_exp = self
            .terms
            .keys()
            .flat_map(|e| e.iter().copied())
            .max()
            .unwrap_or(0);
        Compiled {
            q,
            vars: self.vars,
            max_exp,
            terms: self
                .terms
                .iter()
                .map(|(e, &c)| ((c as i128).rem_euclid(q as i128) as u64, e.clone()))
                .filter(|(c, _)| *c != 0)
                .collect(),
        }
    }

    /// Value at `point` modulo `q`.
    pub fn eval_mod(&self, point: &[u64], q: u64) -> u64 {
        let c = self.compile(q);
        c.eval(&c.power_table(point))
    }

    /// Parses sums of products of integers and variables, with `^`, unary
    /// minus and parentheses. Variables are `x0, x1, ...`; `x, y, z, w` and
    /// the matrix entries `a, b, c, d` name variables 0 to 3.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parser = Parser {
            chars: text.chars().filter(|c| !c.is_whitespace()).collect(),
            pos: 0,
        };
        let poly = parser.expr()?;
        if parser.pos != parser.chars.len() {
            return Err(Error::Parse(format!(
                "unexpected '{}' at offset {} in {text:?}",
                parser.chars[parser.pos], parser.pos
            )));
        }
        let vars = poly.vars.max(1);
        poly.with_vars(vars)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, &c)) in self.terms.iter().rev().enumerate() {
            let sign = if c < 0 { "-" } else { "+" };
            match i {
                0 if c < 0 => write!(f, "-")?,
                0 => {}
                _ => write!(f, " {sign} ")?,
            }
            let mut factors: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(v, &k)| if k == 1 { format!("x{v}") } else { format!("x{v}^{k}") })
                .collect();
            if c.unsigned_abs() != 1 || factors.is_empty() {
                factors.insert(0, c.unsigned_abs().to_string());
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<IntPolynomial> {
        let mut acc = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' { acc.add(&rhs)? } else { acc.sub(&rhs)? };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<IntPolynomial> {
        let mut acc = self.factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            acc = acc.mul(&self.factor()?)?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<IntPolynomial> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return IntPolynomial::constant(1, 0).sub(&self.factor()?);
        }
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let k = self.number()?;
            let k = u32::try_from(k).map_err(|_| Error::Parse(format!("exponent {k} too large")))?;
            return base.pow(k);
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<u64> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits
            .parse()
            .map_err(|_| Error::Parse(format!("expected a number at offset {start}")))
    }

    fn atom(&mut self) -> Result<IntPolynomial> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(Error::Parse(format!("missing ')' at offset {}", self.pos)));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.number()?;
                let n = i64::try_from(n).map_err(|_| overflow("literal"))?;
                Ok(IntPolynomial::constant(1, n))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                self.pos += 1;
                let index = match c {
                    'x' if self.peek().is_some_and(|d| d.is_ascii_digit()) => self.number()? as usize,
                    'x' | 'a' => 0,
                    'y' | 'b' => 1,
                    'z' | 'c' => 2,
                    'w' | 'd' => 3,
                    _ => return Err(Error::Parse(format!("unknown variable '{c}'"))),
                };
                if index >= 64 {
                    return Err(Error::Parse(format!("variable x{index} out of range")));
                }
                Ok(IntPolynomial::variable(index + 1, index))
            }
            Some(c) => Err(Error::Parse(format!("unexpected '{c}' at offset {}", self.pos))),
            None => Err(Error::Parse("unexpected end of input".into())),
        }
    }
}

/// A polynomial with coefficients reduced modulo `q`, ready for evaluation.
#[derive(Debug, Clone)]
pub struct Compiled {
    q: u64,
    vars: usize,
    max_exp: u32,
    terms: Vec<(u64, Vec<u32>)>,
}

impl Compiled {
    fn mulmod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    /// `table[v][k] = point[v]^k mod q`.
    pub fn power_table(&self, point: &[u64]) -> Vec<Vec<u64>> {
        point
            .iter()
            .take(self.vars)
            .map(|&x| {
                let mut row = Vec::with_capacity(self.max_exp as usize + 1);
                let mut acc = 1 % self.q;
                for _ in 0..=self.max_exp {
                    row.push(acc);
                    acc = self.mulmod(acc, x % self.q);
                }
                row
            })
            .collect()
    }

    pub fn eval(&self, table: &[Vec<u64>]) -> u64 {
        let mut sum = 0u64;
        for (c, e) in &self.terms {
            let mut t = *c;
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = self.mulmod(t, table[v][k as usize]);
                }
            }
            sum = (sum + t) % self.q;
        }
        sum
    }
}

fn prime_power(p: u64, n: u32) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if n == 0 {
        return Err(Error::ZeroPrecision);
    }
    p.checked_pow(n)
        .filter(|q| *q <= 1 << 31)
        .ok_or(Error::PrecisionOverflow { p, precision: n })
}

fn points(q: u64, s: usize) -> Result<u128> {
    (q as u128)
        .checked_pow(s as u32)
        .ok_or(Error::BudgetExceeded {
            required: u128::MAX,
            cap: 0,
        })
}

/// Exhaustive count of zeros of `f` in `(Z/p^n)^s`, `s = f.vars()`.
pub fn count_affine_brute(f: &IntPolynomial, p: u64, n: u32, budget: u128) -> Result<u128> {
    let q = prime_power(p, n)?;
    if f.is_zero_mod(p) {
        return Err(Error::ZeroModP(p));
    }
    let s = f.vars();
    let total = points(q, s)?;
    if total > budget {
        return Err(Error::BudgetExceeded {
            required: total,
            cap: budget,
        });
    }
    let compiled = f.compile(q);
    let rest = total / q as u128;
    Ok((0..q)
        .into_par_iter()
        .map(|lead| {
            let mut point = vec![0u64; s];
            point[0] = lead;
            let mut count = 0u128;
            for idx in 0..rest {
                let mut r = idx;
                for slot in point.iter_mut().skip(1) {
                    *slot = (r % q as u128) as u64;
                    r /= q as u128;
                }
                if compiled.eval(&compiled.power_table(&point)) == 0 {
                    count += 1;
                }
            }
            count
        })
        .sum())
}

/// Count of zeros of `f` in `(Z/p^n)^s` by lifting zeros mod `p^k` to zeros
/// mod `p^(k+1)`. The budget bounds the number of lifts examined.
pub fn count_affine(f: &IntPolynomial, p: u64, n: u32, budget: u128) -> Result<u128> {
    let q = prime_power(p, n)?;
    if f.is_zero_mod(p) {
        return Err(Error::ZeroModP(p));
    }
    let s = f.vars();
    let compiled = f.compile(q);
    let fan_out = points(p, s)?;
    let mut visited = 0u128;
    let mut frontier: Vec<Vec<u64>> = vec![vec![0; s]];
    let mut pk = 1u64;
    for _ in 0..n {
        let next_pk = pk * p;
        visited += frontier.len() as u128 * fan_out;
        if visited > budget {
            return Err(Error::BudgetExceeded {
                required: visited,
                cap: budget,
            });
        }
        let lifted: Vec<Vec<u64>> = frontier
            .par_iter()
            .flat_map_iter(|base| {
                let compiled = &compiled;
                (0..fan_out).filter_map(move |idx| {
                    let mut point = base.clone();
                    let mut r = idx;
                    for slot in point.iter_mut() {
                        *slot += (r % p as u128) as u64 * pk;
                        r /= p as u128;
                    }
                    (compiled.eval(&compiled.power_table(&point)) % next_pk == 0).then_some(point)
                })
            })
            .collect();
        frontier = lifted;
        pk = next_pk;
    }
    Ok(frontier.len() as u128)
}

fn binomial(n: u64, k: u64) -> BigUint {
    let mut out = BigUint::one();
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// The affine zero-count bound `d^s C(n+s-1, s-1) p^{ns - n/d}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AffineBound {
    pub d: u32,
    pub s: u32,
    pub p: u64,
    pub n: u32,
    /// `d^s C(n+s-1, s-1)` as a decimal string
    pub coefficient: String,
    #[serde(skip)]
    coefficient_int: BigUint,
}

impl AffineBound {
    pub fn new(d: u32, s: u32, p: u64, n: u32) -> Result<Self> {
        if d == 0 || s == 0 || n == 0 {
            return Err(Error::PreconditionViolation(format!(
                "degree, variable count and exponent must be positive (d={d}, s={s}, n={n})"
            )));
        }
        let c = Pow::pow(BigUint::from(d), s) * binomial(n as u64 + s as u64 - 1, s as u64 - 1);
        Ok(AffineBound {
            d,
            s,
            p,
            n,
            coefficient: c.to_string(),
            coefficient_int: c,
        })
    }

    /// `count <= bound`, checked as `count^d <= coefficient^d p^{n(sd-1)}`.
    pub fn holds(&self, count: u128) -> bool {
        let lhs = Pow::pow(BigUint::from(count), self.d);
        let exp = self.n * (self.s * self.d - 1);
        let rhs = Pow::pow(self.coefficient_int.clone(), self.d) * Pow::pow(BigUint::from(self.p), exp);
        lhs <= rhs
    }

    /// The right-hand side of [`AffineBound::holds`].
    pub fn integer_form(&self) -> BigUint {
        Pow::pow(self.coefficient_int.clone(), self.d)
            * Pow::pow(BigUint::from(self.p), self.n * (self.s * self.d - 1))
    }

    /// Floating-point value of the bound, for display only.
    pub fn approximate(&self) -> f64 {
        let c: f64 = self.coefficient.parse().unwrap_or(f64::INFINITY);
        c * (self.p as f64).powf(self.n as f64 * (self.s as f64 - 1.0 / self.d as f64))
    }
}

/// Zero count of `f` with the bound at `d = degree of f mod p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AffineCheck {
    pub count: u128,
    pub bound: AffineBound,
    pub pass: bool,
}

pub fn check_affine_bound(f: &IntPolynomial, p: u64, n: u32, budget: u128) -> Result<AffineCheck> {
    let count = count_affine(f, p, n, budget)?;
    let d = f.degree_mod_p(p).max(1);
    let bound = AffineBound::new(d, f.vars() as u32, p, n)?;
    let pass = bound.holds(count);
    Ok(AffineCheck { count, bound, pass })
}

/// Zeros of `g` in `F_p^s` against `deg(g) p^{s-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchmidtCheck {
    pub count: u128,
    pub bound: u128,
    pub pass: bool,
}

pub fn schmidt_check(g: &IntPolynomial, p: u64, budget: u128) -> Result<SchmidtCheck> {
    if g.is_zero_mod(p) {
        return Err(Error::ZeroPolynomial(p));
    }
    let count = count_affine_brute(g, p, 1, budget)?;
    let bound = g.degree_mod_p(p) as u128 * (p as u128).pow(g.vars() as u32 - 1);
    Ok(SchmidtCheck {
        count,
        bound,
        pass: count <= bound,
    })
}

/// Zeros of `f(a, b, c, d)` on `SL(2, F_p)` and the ratio `count / (deg f p^2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sl2Count {
    pub p: u64,
    pub count: u128,
    pub points: u128,
    pub degree: u32,
    #[serde(serialize_with = "crate::volumes::ser_ratio")]
    pub ratio: Ratio<u128>,
}

pub fn count_mod_p_on_sl2(f: &IntPolynomial, p: u64) -> Result<Sl2Count> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p > SL2_PRIME_CAP {
        return Err(Error::BudgetExceeded {
            required: p as u128,
            cap: SL2_PRIME_CAP as u128,
        });
    }
    if f.vars() > 4 {
        return Err(Error::PreconditionViolation(format!(
            "{} variables; expected the entries a, b, c, d",
            f.vars()
        )));
    }
    let f = f.with_vars(4)?;
    let compiled = f.compile(p);
    let inv = |x: u64| {
        let mut r = 1u64;
        for _ in 0..p - 2 {
            r = r * x % p;
        }
        r
    };
    let count: u128 = (0..p)
        .into_par_iter()
        .map(|a| {
            let mut count = 0u128;
            for c in 0..p {
                if a == 0 && c == 0 {
                    continue;
                }
                // ad - bc = 1 with (b, d) = (b0, d0) + t (a, c)
                let (b0, d0) = if a != 0 { (0, inv(a)) } else { ((p - inv(c)) % p, 0) };
                for t in 0..p {
                    let b = (b0 + t * a) % p;
                    let d = (d0 + t * c) % p;
                    if compiled.eval(&compiled.power_table(&[a, b, c, d])) == 0 {
                        count += 1;
                    }
                }
            }
            count
        })
        .sum();
    let points = p as u128 * (p as u128 * p as u128 - 1);
    if count == points {
        return Err(Error::IdenticallyZeroOnV(p));
    }
    let degree = f.degree_mod_p(p);
    Ok(Sl2Count {
        p,
        count,
        points,
        degree,
        ratio: Ratio::new(count, degree.max(1) as u128 * (p as u128).pow(2)),
    })
}

/// Random polynomial in `s` variables of degree exactly `d` mod `p`, with
/// coefficients in `(-bound, bound)`.
pub fn random_polynomial<R: Rng>(rng: &mut R, s: usize, d: u32, p: u64, bound: i64) -> IntPolynomial {
    let mut monomials: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..s {
        monomials = monomials
            .into_iter()
            .flat_map(|m| {
                let used: u32 = m.iter().sum();
                (0..=d - used).map(move |k| {
                    let mut m = m.clone();
                    m.push(k);
                    m
                })
            })
            .collect();
    }
    loop {
        let mut f = IntPolynomial::zero(s);
        for m in &monomials {
            // sparse: about half the monomials present
            if rng.gen_bool(0.5) {
                f.add_term(m.clone(), rng.gen_range(1 - bound..bound))
                    .expect("bounded coefficient");
            }
        }
        if f.degree_mod_p(p) == d && !f.is_zero_mod(p) {
            return f;
        }
    }
}
