//! Exact arithmetic kernel: multivariate integer Laurent polynomials and
//! rational functions in `q` and registered base symbols, q-combinatorics
//! ([l]_q, factorials, Gaussian binomials), and the rational function
//! psi(z) = (q - q^-1 z)/(1 - z) together with its mode expansions.
//!
//! Public surface: [`Scalar`], [`SpectralParam`], [`Mono`], [`Poly`],
//! [`register_symbol`], [`qint`], [`qfactorial`], [`qbinomial`],
//! [`psi_eval`], [`psi_eval_inverse`], [`psi_mode`].

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};
use thiserror::Error;

/// Identifier of a registered base symbol (a formal transcendental).
pub type SymId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    /// psi evaluated where its denominator vanishes (argument equal to 1).
    #[error("pole of psi: argument equals 1")]
    Pole,
    /// psi inverted where psi vanishes (argument equal to q^2).
    #[error("inverse of zero: psi vanishes at q^2")]
    InverseOfZero,
    /// Gaussian binomial with the lower index outside 0..=m.
    #[error("qbinomial({m},{mp}) out of range")]
    BinomialRange { m: i64, mp: i64 },
    /// Symbol name rejected by the registry.
    #[error("bad symbol name: {0}")]
    BadSymbol(String),
    /// Division by the zero scalar.
    #[error("division by zero scalar")]
    DivisionByZero,
    /// Malformed text or JSON input.
    #[error("parse error: {0}")]
    Parse(String),
}

fn symbols() -> &'static Mutex<Vec<String>> {
    static TABLE: OnceLock<Mutex<Vec<String>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(Vec::new()))
}

fn valid_symbol(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    name.len() <= 64 && chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && name != "q"
}

/// Registers a base symbol (idempotent) and returns its id.
///
/// The registry is global, append-only and synchronized; ids are assigned in
/// registration order.
pub fn register_symbol(name: &str) -> Result<SymId, ScalarError> {
    if !valid_symbol(name) {
        return Err(ScalarError::BadSymbol(name.to_string()));
    }
    let mut table = symbols().lock().unwrap();
    if let Some(pos) = table.iter().position(|n| n == name) {
        return Ok(pos as SymId);
    }
    table.push(name.to_string());
    Ok((table.len() - 1) as SymId)
}

/// Name of a registered symbol.
pub fn symbol_name(id: SymId) -> String {
    symbols().lock().unwrap()[id as usize].clone()
}

/// A formal evaluation point `a_group * q^qexp`.
///
/// Two params with the same group have ratio `q^(m1-m2)`; params in different
/// groups have a formal, never-root-of-unity ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpectralParam {
    pub group: SymId,
    pub qexp: i64,
}

impl SpectralParam {
    pub fn new(group: SymId, qexp: i64) -> Self {
        SpectralParam { group, qexp }
    }

    /// The param multiplied by `q^d`.
    pub fn shift(&self, d: i64) -> Self {
        SpectralParam { group: self.group, qexp: self.qexp + d }
    }

    /// `self / other` as a monomial: `q^(m1-m2)` when the groups agree,
    /// otherwise the formal ratio with base exponents +1/-1.
    pub fn ratio_mono(&self, other: &SpectralParam) -> Mono {
        let mut m = Mono::q_pow(self.qexp - other.qexp);
        if self.group != other.group {
            m = m.mul(&Mono::base(self.group, 1)).mul(&Mono::base(other.group, -1));
        }
        m
    }

    /// The param as a scalar `a * q^m`.
    pub fn as_scalar(&self) -> Scalar {
        Scalar::from_mono(Mono::q_pow(self.qexp).mul(&Mono::base(self.group, 1)))
    }

    /// Canonical text `name` or `name*q^m`.
    pub fn text(&self) -> String {
        let name = symbol_name(self.group);
        if self.qexp == 0 {
            name
        } else {
            format!("{}*q^{}", name, self.qexp)
        }
    }

    /// Parses `name`, `name*q^m` (also accepts `name*q` for m = 1).
    pub fn parse(s: &str) -> Result<Self, ScalarError> {
        let s = s.trim();
        let (name, qexp) = match s.split_once('*') {
            None => (s, 0),
            Some((n, rest)) => {
                let rest = rest.trim();
                let exp = if rest == "q" {
                    1
                } else if let Some(e) = rest.strip_prefix("q^") {
                    e.trim()
                        .parse::<i64>()
                        .map_err(|_| ScalarError::Parse(format!("bad q-power in param `{s}`")))?
                } else {
                    return Err(ScalarError::Parse(format!("bad param `{s}`")));
                };
                (n.trim(), exp)
            }
        };
        Ok(SpectralParam { group: register_symbol(name)?, qexp })
    }
}

/// A Laurent monomial `q^k * prod a_i^{e_i}`; base exponents sorted by symbol
/// id with no zero entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Mono {
    pub q: i64,
    pub bases: Vec<(SymId, i64)>,
}

impl Mono {
    pub fn one() -> Self {
        Mono::default()
    }

    pub fn q_pow(k: i64) -> Self {
        Mono { q: k, bases: Vec::new() }
    }

    pub fn base(id: SymId, e: i64) -> Self {
        if e == 0 {
            Mono::one()
        } else {
            Mono { q: 0, bases: vec![(id, e)] }
        }
    }

    pub fn is_one(&self) -> bool {
        self.q == 0 && self.bases.is_empty()
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut bases = Vec::with_capacity(self.bases.len() + other.bases.len());
        let (mut i, mut j) = (0, 0);
        while i < self.bases.len() || j < other.bases.len() {
            if j >= other.bases.len() || (i < self.bases.len() && self.bases[i].0 < other.bases[j].0) {
                bases.push(self.bases[i]);
                i += 1;
            } else if i >= self.bases.len() || other.bases[j].0 < self.bases[i].0 {
                bases.push(other.bases[j]);
                j += 1;
            } else {
                let e = self.bases[i].1 + other.bases[j].1;
                if e != 0 {
                    bases.push((self.bases[i].0, e));
                }
                i += 1;
                j += 1;
            }
        }
        Mono { q: self.q + other.q, bases }
    }

    pub fn inv(&self) -> Mono {
        Mono { q: -self.q, bases: self.bases.iter().map(|&(g, e)| (g, -e)).collect() }
    }

    pub fn pow(&self, k: i64) -> Mono {
        if k == 0 {
            return Mono::one();
        }
        Mono {
            q: self.q * k,
            bases: self.bases.iter().map(|&(g, e)| (g, e * k)).collect(),
        }
    }

    fn exp_of(&self, g: SymId) -> i64 {
        self.bases
            .binary_search_by_key(&g, |&(id, _)| id)
            .map(|pos| self.bases[pos].1)
            .unwrap_or(0)
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        // Lexicographic on (q-exponent, base exponents by ascending symbol id).
        match self.q.cmp(&other.q) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.bases.get(i), other.bases.get(j)) {
                (None, None) => return Ordering::Equal,
                (sa, sb) => {
                    let ga = sa.map(|&(g, _)| g);
                    let gb = sb.map(|&(g, _)| g);
                    let g = match (ga, gb) {
                        (Some(x), Some(y)) => x.min(y),
                        (Some(x), None) => x,
                        (None, Some(y)) => y,
                        (None, None) => unreachable!(),
                    };
                    let ea = if ga == Some(g) { self.bases[i].1 } else { 0 };
                    let eb = if gb == Some(g) { other.bases[j].1 } else { 0 };
                    match ea.cmp(&eb) {
                        Ordering::Equal => {}
                        ord => return ord,
                    }
                    if ga == Some(g) {
                        i += 1;
                    }
                    if gb == Some(g) {
                        j += 1;
                    }
                }
            }
        }
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A Laurent polynomial with integer coefficients: finitely many monomials,
/// none with a zero coefficient.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Poly {
    terms: BTreeMap<Mono, BigInt>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Poly::from_bigint(BigInt::from(n))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        let mut terms = BTreeMap::new();
        if !n.is_zero() {
            terms.insert(Mono::one(), n);
        }
        Poly { terms }
    }

    pub fn from_mono(m: Mono) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(m, BigInt::one());
        Poly { terms }
    }

    pub fn from_terms(pairs: Vec<(Mono, BigInt)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in pairs {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self.terms.iter().next().map(|(m, c)| m.is_one() && c.is_one()) == Some(true)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, m: Mono, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_mono(&self, m: &Mono) -> Poly {
        Poly { terms: self.terms.iter().map(|(k, c)| (k.mul(m), c.clone())).collect() }
    }

    pub fn mul_int(&self, n: &BigInt) -> Poly {
        if n.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(k, c)| (k.clone(), c * n)).collect() }
    }

    /// Leading term under the monomial order (the maximal monomial).
    pub fn leading(&self) -> Option<(&Mono, &BigInt)> {
        self.terms.iter().next_back()
    }

    /// Positive gcd of all coefficients (0 for the zero polynomial).
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in self.terms.values() {
            g = big_gcd(&g, c);
        }
        g
    }

    fn div_int_exact(&self, n: &BigInt) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c / n)).collect() }
    }

    /// The monomial of componentwise-minimal exponents over all terms.
    fn min_mono(&self) -> Mono {
        let mut q = i64::MAX;
        let mut mins: BTreeMap<SymId, i64> = BTreeMap::new();
        let mut seen: BTreeMap<SymId, usize> = BTreeMap::new();
        let n = self.terms.len();
        for (m, _) in &self.terms {
            q = q.min(m.q);
            for &(g, e) in &m.bases {
                mins.entry(g).and_modify(|v| *v = (*v).min(e)).or_insert(e);
                *seen.entry(g).or_insert(0) += 1;
            }
        }
        if n == 0 {
            return Mono::one();
        }
        // A symbol absent from some term has implicit exponent 0 there.
        let bases = mins
            .into_iter()
            .filter_map(|(g, e)| {
                let e = if seen[&g] < n { e.min(0) } else { e };
                (e != 0).then_some((g, e))
            })
            .collect();
        Mono { q, bases }
    }

    /// Splits into (monomial part, true polynomial with min exponents 0).
    fn strip_laurent(&self) -> (Mono, Poly) {
        let m = self.min_mono();
        if m.is_one() {
            (m, self.clone())
        } else {
            (m.clone(), self.mul_mono(&m.inv()))
        }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }
}

fn big_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    num_integer::Integer::gcd(a, b)
}

/// All variables (q is Var::Q) present in a polynomial, ascending.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Var {
    Q,
    Base(SymId),
}

fn vars_of(p: &Poly) -> Vec<Var> {
    let mut out: Vec<Var> = Vec::new();
    let mut has_q = false;
    for (m, _) in p.terms() {
        if m.q != 0 {
            has_q = true;
        }
        for &(g, _) in &m.bases {
            if !out.contains(&Var::Base(g)) {
                out.push(Var::Base(g));
            }
        }
    }
    if has_q {
        out.push(Var::Q);
    }
    out.sort();
    out
}

fn mono_var_exp(m: &Mono, v: Var) -> i64 {
    match v {
        Var::Q => m.q,
        Var::Base(g) => m.exp_of(g),
    }
}

fn mono_without_var(m: &Mono, v: Var) -> Mono {
    match v {
        Var::Q => Mono { q: 0, bases: m.bases.clone() },
        Var::Base(g) => Mono {
            q: m.q,
            bases: m.bases.iter().copied().filter(|&(id, _)| id != g).collect(),
        },
    }
}

fn mono_from_var(v: Var, e: i64) -> Mono {
    match v {
        Var::Q => Mono::q_pow(e),
        Var::Base(g) => Mono::base(g, e),
    }
}

/// Dense univariate view of a true polynomial in the pivot variable, with
/// polynomial coefficients free of the pivot.
fn to_univar(p: &Poly, v: Var) -> Vec<Poly> {
    let deg = p.terms().map(|(m, _)| mono_var_exp(m, v)).max().unwrap_or(0);
    debug_assert!(p.terms().all(|(m, _)| mono_var_exp(m, v) >= 0));
    let mut coeffs = vec![Poly::zero(); (deg + 1) as usize];
    for (m, c) in p.terms() {
        let e = mono_var_exp(m, v) as usize;
        coeffs[e].add_term(mono_without_var(m, v), c.clone());
    }
    coeffs
}

fn from_univar(coeffs: &[Poly], v: Var) -> Poly {
    let mut out = Poly::zero();
    for (e, c) in coeffs.iter().enumerate() {
        out = out.add(&c.mul_mono(&mono_from_var(v, e as i64)));
    }
    out
}

fn univar_deg(coeffs: &[Poly]) -> Option<usize> {
    coeffs.iter().rposition(|c| !c.is_zero())
}

/// Pseudo-remainder of univariate views, b nonzero: some `lb^k * a mod b`
/// with k the number of reduction steps taken. Callers primitivize the
/// result, so the exact power is irrelevant.
fn pseudo_rem(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let mut r: Vec<Poly> = a.to_vec();
    let db = univar_deg(b).expect("pseudo_rem by zero");
    let lb = b[db].clone();
    loop {
        let dr = match univar_deg(&r) {
            None => break,
            Some(d) => d,
        };
        if dr < db {
            break;
        }
        let lr = r[dr].clone();
        // r := lb * r - lr * x^(dr-db) * b
        for c in r.iter_mut() {
            *c = c.mul(&lb);
        }
        for k in 0..=db {
            let delta = lr.mul(&b[k]);
            r[dr - db + k] = r[dr - db + k].sub(&delta);
        }
        debug_assert!(univar_deg(&r).map_or(true, |d| d < dr));
    }
    r
}

fn mono_gcd(a: &Mono, b: &Mono) -> Mono {
    let q = a.q.min(b.q);
    // A variable missing from one side has exponent 0 there; true-poly
    // min monomials are nonnegative, so the min is then 0 and drops out.
    let bases = a
        .bases
        .iter()
        .filter_map(|&(g, e)| {
            let eb = b.bases.iter().find(|&&(h, _)| h == g).map_or(0, |&(_, e)| e);
            let m = e.min(eb);
            (m != 0).then_some((g, m))
        })
        .collect();
    Mono { q, bases }
}

/// Exact full content of a univariate view: the integer content times the
/// common monomial times the primitive gcd of the coefficients. Unlike a
/// bare gcd chain this is an exact common divisor, so dividing it out
/// leaves a genuinely primitive coefficient list.
fn univar_content(coeffs: &[Poly]) -> Poly {
    let mut int_c = BigInt::from(0);
    let mut mono_c: Option<Mono> = None;
    let mut stripped: Vec<Poly> = Vec::new();
    for c in coeffs {
        if c.is_zero() {
            continue;
        }
        int_c = big_gcd(&int_c, &c.content());
        let (m, t) = c.strip_laurent();
        mono_c = Some(match mono_c {
            None => m,
            Some(prev) => mono_gcd(&prev, &m),
        });
        stripped.push(t);
    }
    // Small coefficients first: the gcd chain usually collapses to 1 early.
    stripped.sort_by_key(|t| t.num_terms());
    let mut poly_c = Poly::zero();
    for t in &stripped {
        if poly_c.is_one() {
            break;
        }
        poly_c = poly_gcd_true(&poly_c, t);
    }
    let mono_c = mono_c.unwrap_or_else(Mono::one);
    poly_c.mul_mono(&mono_c).mul(&Poly::from_bigint(int_c))
}

fn coeff_l1(p: &Poly) -> BigInt {
    let mut s = BigInt::from(0);
    for (_, c) in p.terms() {
        s += c.abs();
    }
    s
}

/// Substitutes an integer for one variable of a true polynomial.
fn eval_var(p: &Poly, v: Var, xi: &BigInt) -> Poly {
    let deg = p.terms().map(|(m, _)| mono_var_exp(m, v)).max().unwrap_or(0);
    let mut pows = Vec::with_capacity(deg as usize + 1);
    let mut acc = BigInt::from(1);
    for _ in 0..=deg {
        pows.push(acc.clone());
        acc *= xi;
    }
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        let e = mono_var_exp(m, v) as usize;
        out.add_term(mono_without_var(m, v), c * &pows[e]);
    }
    out
}

/// Splits coefficientwise into the balanced digit mod xi and the exact
/// quotient, so repeated application recovers xi-adic digits.
fn balanced_split(p: &Poly, xi: &BigInt) -> (Poly, Poly) {
    let mut digit = Poly::zero();
    let mut quot = Poly::zero();
    for (m, c) in p.terms() {
        let mut r = c % xi;
        if r.is_negative() {
            r += xi;
        }
        if &r + &r > *xi {
            r -= xi;
        }
        let q = (c - &r) / xi;
        if !r.is_zero() {
            digit.add_term(m.clone(), r);
        }
        if !q.is_zero() {
            quot.add_term(m.clone(), q);
        }
    }
    (digit, quot)
}

fn lift_digits(ge: &Poly, v: Var, xi: &BigInt, bound: i64) -> Option<Poly> {
    let mut g = Poly::zero();
    let mut cur = ge.clone();
    let mut e: i64 = 0;
    while !cur.is_zero() {
        if e > bound {
            return None;
        }
        let (digit, quot) = balanced_split(&cur, xi);
        g = g.add(&digit.mul_mono(&mono_from_var(v, e)));
        cur = quot;
        e += 1;
    }
    Some(g)
}

/// Heuristic gcd: evaluate one variable at a large integer, recurse on the
/// images, lift the integer gcd back through its xi-adic digits, and verify
/// by exact division. Returns the full gcd in the integer polynomial ring,
/// content included: the recursive images encode outer structure in their
/// integer content, so it must be propagated, not stripped. Inputs are
/// reduced to primitive parts first so that only a small accidental
/// cofactor factor can contaminate the image gcd, and that factor is
/// removed by taking the primitive part of the lift. The evaluation point
/// exceeds a Landau-Mignotte style bound on divisor coefficients, so a
/// verified lift is the whole gcd rather than a proper divisor of it.
/// Returns None when the lifts keep failing; the caller falls back to the
/// remainder sequence.
fn heu_gcd(a: &Poly, b: &Poly, vars: &[Var]) -> Option<Poly> {
    if a.is_zero() {
        return Some(b.clone());
    }
    if b.is_zero() {
        return Some(a.clone());
    }
    let Some((&v, rest)) = vars.split_first() else {
        return Some(Poly::from_bigint(big_gcd(&a.content(), &b.content())));
    };
    let da = a.terms().map(|(m, _)| mono_var_exp(m, v)).max().unwrap_or(0);
    let db = b.terms().map(|(m, _)| mono_var_exp(m, v)).max().unwrap_or(0);
    if da == 0 && db == 0 {
        return heu_gcd(a, b, rest);
    }
    let ca = a.content();
    let cb = b.content();
    let ic = big_gcd(&ca, &cb);
    let (ma, ta) = a.div_int_exact(&ca).strip_laurent();
    let (mb, tb) = b.div_int_exact(&cb).strip_laurent();
    let mg = mono_gcd(&ma, &mb);
    let bound = da.min(db);
    let norm = coeff_l1(&ta).max(coeff_l1(&tb));
    let mut xi: BigInt = (norm + 1) << (bound.min(62) as usize + 2);
    for _attempt in 0..4 {
        let ga = eval_var(&ta, v, &xi);
        let gb = eval_var(&tb, v, &xi);
        if let Some(ge) = heu_gcd(&ga, &gb, rest) {
            if let Some(g) = lift_digits(&ge, v, &xi, bound) {
                let g = make_primitive(&g);
                if !g.is_zero()
                    && poly_div_exact(&ta, &g).is_some()
                    && poly_div_exact(&tb, &g).is_some()
                {
                    return Some(g.mul_mono(&mg).mul(&Poly::from_bigint(ic)));
                }
            }
        }
        xi = xi * 8 + 5;
    }
    None
}

/// Divides out the full content, leaving a primitive coefficient list.
fn primitivize(coeffs: &[Poly]) -> (Poly, Vec<Poly>) {
    let cont = univar_content(coeffs);
    if cont.is_zero() || cont.is_one() {
        return (cont, coeffs.to_vec());
    }
    let parts = coeffs
        .iter()
        .map(|c| {
            if c.is_zero() {
                Poly::zero()
            } else {
                poly_div_exact(c, &cont).expect("content divides")
            }
        })
        .collect();
    (cont, parts)
}

/// Exact multivariate division for true polynomials; None when not divisible.
fn poly_div_exact(a: &Poly, b: &Poly) -> Option<Poly> {
    if a.is_zero() {
        return Some(Poly::zero());
    }
    if b.is_zero() {
        return None;
    }
    let (lb_m, lb_c) = b.leading().unwrap();
    let (lb_m, lb_c) = (lb_m.clone(), lb_c.clone());
    let mut rem = a.clone();
    let mut quot = Poly::zero();
    while let Some((lm, lc)) = rem.leading() {
        let qm = lm.mul(&lb_m.inv());
        if qm.q < 0 || qm.bases.iter().any(|&(_, e)| e < 0) {
            return None;
        }
        let qc = lc / &lb_c;
        if (&qc * &lb_c) != *lc {
            return None;
        }
        let t = Poly::from_terms(vec![(qm, qc)]);
        quot = quot.add(&t);
        rem = rem.sub(&t.mul(b));
    }
    Some(quot)
}

/// Primitive gcd of two polynomials, ignoring monomial (unit) factors.
/// Inputs may be Laurent; the result is a true polynomial with content 1
/// and positive leading coefficient.
fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    let (_, ta) = a.strip_laurent();
    let (_, tb) = b.strip_laurent();
    poly_gcd_true(&ta, &tb)
}

fn make_primitive(p: &Poly) -> Poly {
    if p.is_zero() {
        return Poly::zero();
    }
    // Monomials are units here, so a gcd must never carry a monomial
    // factor: otherwise it could fail to divide the other input exactly.
    let (_, t) = p.strip_laurent();
    let c = t.content();
    let mut out = t.div_int_exact(&c);
    if out.leading().map(|(_, c)| c.is_negative()) == Some(true) {
        out = out.neg();
    }
    out
}

fn poly_gcd_true(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return make_primitive(b);
    }
    if b.is_zero() {
        return make_primitive(a);
    }
    if a == b {
        return make_primitive(a);
    }
    if a.num_terms() == 1 || b.num_terms() == 1 {
        // A single term is a unit times a content; primitive gcd is 1.
        return Poly::one();
    }
    let mut vars = vars_of(a);
    for v in vars_of(b) {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    if vars.is_empty() {
        let ca = a.content();
        let cb = b.content();
        return Poly::from_bigint(big_gcd(&ca, &cb));
    }
    // Pivot on the variable of smallest joint degree: it shortens the
    // remainder sequence, which dominates the cost.
    let v = *vars
        .iter()
        .min_by_key(|&&v| {
            let da = a.terms().map(|(m, _)| mono_var_exp(m, v)).max().unwrap_or(0);
            let db = b.terms().map(|(m, _)| mono_var_exp(m, v)).max().unwrap_or(0);
            da.max(db)
        })
        .unwrap();
    // One side dividing the other is common for nested products and cheap
    // to detect.
    if poly_div_exact(b, a).is_some() {
        return make_primitive(a);
    }
    if poly_div_exact(a, b).is_some() {
        return make_primitive(b);
    }
    if let Some(g) = heu_gcd(a, b, &vars) {
        return make_primitive(&g);
    }
    let (cont_a, mut r0) = primitivize(&to_univar(a, v));
    let (cont_b, mut r1) = primitivize(&to_univar(b, v));
    let cont_gcd = poly_gcd_true(&cont_a, &cont_b);
    if univar_deg(&r0) < univar_deg(&r1) {
        std::mem::swap(&mut r0, &mut r1);
    }
    // Primitive remainder sequence: dividing each remainder by its full
    // content keeps coefficients as small as any variant allows, which is
    // what sparse inputs with large degree gaps need.
    loop {
        let r = pseudo_rem(&r0, &r1);
        match univar_deg(&r) {
            None => {
                // r1 is primitive, so it is the gcd of the primitive parts.
                return make_primitive(&cont_gcd.mul(&from_univar(&r1, v)));
            }
            Some(_) => {
                let (_, rp) = primitivize(&r);
                r0 = r1;
                r1 = rp;
            }
        }
    }
}

/// An exact rational function: reduced, canonically normalized fraction of
/// integer Laurent polynomials.
///
/// Canonical form: the denominator is a true polynomial with minimal exponent
/// 0 in every variable, positive leading coefficient, and no common
/// polynomial or integer factor with the numerator. Structural equality
/// therefore agrees with cross-multiplication equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Scalar {
    num: Poly,
    den: Poly,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Scalar::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Scalar { num: Poly::from_int(n), den: Poly::one() }
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Scalar { num: Poly::from_bigint(n), den: Poly::one() }
    }

    pub fn from_mono(m: Mono) -> Self {
        Scalar { num: Poly::from_mono(m), den: Poly::one() }
    }

    pub fn q_pow(k: i64) -> Self {
        Scalar::from_mono(Mono::q_pow(k))
    }

    pub fn from_poly(p: Poly) -> Self {
        Scalar { num: p, den: Poly::one() }
    }

    pub fn new(num: Poly, den: Poly) -> Result<Self, ScalarError> {
        if den.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Scalar::normalized(num, den))
    }

    fn normalized(num: Poly, den: Poly) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return Scalar::zero();
        }
        let (mut num, mut den) = (num, den);
        // Remove the common primitive polynomial factor.
        if !(den.is_one() || num.num_terms() == 1 && den.num_terms() == 1) {
            let g = poly_gcd(&num, &den);
            if !g.is_one() {
                let (mn, tn) = num.strip_laurent();
                let (md, td) = den.strip_laurent();
                num = poly_div_exact(&tn, &g).expect("gcd divides").mul_mono(&mn);
                den = poly_div_exact(&td, &g).expect("gcd divides").mul_mono(&md);
            }
        }
        // Monomial units move to the numerator side.
        let (md, td) = den.strip_laurent();
        if !md.is_one() {
            den = td;
            num = num.mul_mono(&md.inv());
        }
        // Coprime integer contents, positive leading denominator coefficient.
        let c = big_gcd(&num.content(), &den.content());
        if !c.is_one() {
            num = num.div_int_exact(&c);
            den = den.div_int_exact(&c);
        }
        if den.leading().map(|(_, c)| c.is_negative()) == Some(true) {
            num = num.neg();
            den = den.neg();
        }
        Scalar { num, den }
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        if self.den == other.den {
            return Scalar::normalized(self.num.add(&other.num), self.den.clone());
        }
        Scalar::normalized(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn neg(&self) -> Scalar {
        Scalar { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        if self.is_zero() || other.is_zero() {
            return Scalar::zero();
        }
        Scalar::normalized(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    /// Multiplication by a pure monomial; preserves canonical form directly.
    pub fn mul_mono(&self, m: &Mono) -> Scalar {
        Scalar { num: self.num.mul_mono(m), den: self.den.clone() }
    }

    pub fn inv(&self) -> Result<Scalar, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Scalar::normalized(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow_i64(&self, k: i64) -> Result<Scalar, ScalarError> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut out = Scalar::one();
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        Ok(out)
    }

    /// Canonical text `num` or `num/den`.
    pub fn text(&self) -> String {
        if self.den.is_one() {
            poly_text(&self.num)
        } else {
            format!("{}/{}", poly_text(&self.num), poly_text(&self.den))
        }
    }

    /// Parses the canonical text form (tolerates whitespace).
    pub fn parse(s: &str) -> Result<Self, ScalarError> {
        let s = s.trim();
        let (ns, ds) = match split_top_slash(s) {
            Some((n, d)) => (n, Some(d)),
            None => (s, None),
        };
        let num = poly_parse(ns)?;
        let den = match ds {
            Some(d) => poly_parse(d)?,
            None => Poly::one(),
        };
        Scalar::new(num, den)
    }

    /// JSON object `{vars, num, den}`; term rows are `[coeff, qexp, exps...]`
    /// with coefficients as decimal strings and exponents aligned with `vars`.
    pub fn to_json(&self) -> Value {
        let mut vars: Vec<SymId> = Vec::new();
        for p in [&self.num, &self.den] {
            for (m, _) in p.terms() {
                for &(g, _) in &m.bases {
                    if !vars.contains(&g) {
                        vars.push(g);
                    }
                }
            }
        }
        let mut named: Vec<(String, SymId)> = vars.into_iter().map(|g| (symbol_name(g), g)).collect();
        named.sort();
        let ids: Vec<SymId> = named.iter().map(|&(_, g)| g).collect();
        let row = |m: &Mono, c: &BigInt| -> Value {
            let mut r = vec![json!(c.to_string()), json!(m.q)];
            for &g in &ids {
                r.push(json!(m.exp_of(g)));
            }
            Value::Array(r)
        };
        let poly_rows = |p: &Poly| -> Value {
            Value::Array(p.terms().map(|(m, c)| row(m, c)).collect())
        };
        json!({
            "vars": named.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
            "num": poly_rows(&self.num),
            "den": poly_rows(&self.den),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, ScalarError> {
        let obj = v.as_object().ok_or_else(|| ScalarError::Parse("scalar: not an object".into()))?;
        let vars = obj
            .get("vars")
            .and_then(|x| x.as_array())
            .ok_or_else(|| ScalarError::Parse("scalar: missing vars".into()))?;
        let mut ids = Vec::new();
        for name in vars {
            let name = name.as_str().ok_or_else(|| ScalarError::Parse("scalar: bad var".into()))?;
            ids.push(register_symbol(name)?);
        }
        let read_poly = |key: &str| -> Result<Poly, ScalarError> {
            let rows = obj
                .get(key)
                .and_then(|x| x.as_array())
                .ok_or_else(|| ScalarError::Parse(format!("scalar: missing {key}")))?;
            let mut pairs = Vec::new();
            for r in rows {
                let r = r.as_array().ok_or_else(|| ScalarError::Parse("scalar: bad term".into()))?;
                if r.len() != 2 + ids.len() {
                    return Err(ScalarError::Parse("scalar: term arity".into()));
                }
                let coeff = match &r[0] {
                    Value::String(s) => s
                        .parse::<BigInt>()
                        .map_err(|_| ScalarError::Parse("scalar: bad coeff".into()))?,
                    Value::Number(n) => BigInt::from(
                        n.as_i64().ok_or_else(|| ScalarError::Parse("scalar: bad coeff".into()))?,
                    ),
                    _ => return Err(ScalarError::Parse("scalar: bad coeff".into())),
                };
                let qexp = r[1].as_i64().ok_or_else(|| ScalarError::Parse("scalar: bad qexp".into()))?;
                let mut mono = Mono::q_pow(qexp);
                for (k, &g) in ids.iter().enumerate() {
                    let e = r[2 + k]
                        .as_i64()
                        .ok_or_else(|| ScalarError::Parse("scalar: bad exponent".into()))?;
                    mono = mono.mul(&Mono::base(g, e));
                }
                pairs.push((mono, coeff));
            }
            Ok(Poly::from_terms(pairs))
        };
        Scalar::new(read_poly("num")?, read_poly("den")?)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text())
    }
}

fn poly_text(p: &Poly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    // Descending monomial order: leading term first.
    for (m, c) in p.terms.iter().rev() {
        let mut s = c.to_string();
        if m.q != 0 {
            s.push_str(&format!("*q^{}", m.q));
        }
        for &(g, e) in &m.bases {
            s.push_str(&format!("*{}^{}", symbol_name(g), e));
        }
        parts.push(s);
    }
    parts.join(" + ")
}

fn split_top_slash(s: &str) -> Option<(&str, &str)> {
    s.split_once('/')
}

fn poly_parse(s: &str) -> Result<Poly, ScalarError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ScalarError::Parse("empty polynomial".into()));
    }
    let mut pairs = Vec::new();
    for term in s.split('+') {
        let term = term.trim();
        if term == "0" {
            continue;
        }
        let mut coeff: Option<BigInt> = None;
        let mut mono = Mono::one();
        for factor in term.split('*') {
            let factor = factor.trim();
            if factor.is_empty() {
                return Err(ScalarError::Parse(format!("empty factor in `{term}`")));
            }
            if let Some(rest) = factor.strip_prefix("q^") {
                let e: i64 = rest
                    .trim()
                    .parse()
                    .map_err(|_| ScalarError::Parse(format!("bad exponent `{factor}`")))?;
                mono = mono.mul(&Mono::q_pow(e));
            } else if factor == "q" {
                mono = mono.mul(&Mono::q_pow(1));
            } else if factor.chars().next().map(|c| c.is_ascii_alphabetic()) == Some(true) {
                let (name, exp) = match factor.split_once('^') {
                    Some((n, e)) => (
                        n.trim(),
                        e.trim()
                            .parse::<i64>()
                            .map_err(|_| ScalarError::Parse(format!("bad exponent `{factor}`")))?,
                    ),
                    None => (factor, 1),
                };
                mono = mono.mul(&Mono::base(register_symbol(name)?, exp));
            } else {
                let c: BigInt = factor
                    .parse()
                    .map_err(|_| ScalarError::Parse(format!("bad coefficient `{factor}`")))?;
                coeff = Some(match coeff {
                    None => c,
                    Some(prev) => prev * c,
                });
            }
        }
        pairs.push((mono, coeff.unwrap_or_else(BigInt::one)));
    }
    Ok(Poly::from_terms(pairs))
}

/// The q-integer [l]_q = (q^l - q^-l)/(q - q^-1) as a Laurent polynomial.
pub fn qint(l: i64) -> Scalar {
    // [l]_q = q^(l-1) + q^(l-3) + ... + q^(1-l); [-l] = -[l].
    let sign = if l < 0 { -1 } else { 1 };
    let n = l.unsigned_abs() as i64;
    let mut p = Poly::zero();
    let mut e = n - 1;
    while e >= 1 - n {
        p.add_term(Mono::q_pow(e), BigInt::from(sign));
        e -= 2;
    }
    Scalar::from_poly(p)
}

/// [m]_q! = [m]_q [m-1]_q ... [1]_q.
pub fn qfactorial(m: u32) -> Scalar {
    let mut out = Scalar::one();
    for l in 1..=m as i64 {
        out = out.mul(&qint(l));
    }
    out
}

/// The Gaussian binomial [m choose m']_q; errors when m' is outside 0..=m.
pub fn qbinomial(m: i64, mp: i64) -> Result<Scalar, ScalarError> {
    if m < 0 || mp < 0 || mp > m {
        return Err(ScalarError::BinomialRange { m, mp });
    }
    let num = qfactorial(m as u32);
    let den = qfactorial((m - mp) as u32).mul(&qfactorial(mp as u32));
    num.div(&den)
}

/// psi(x) = (q - q^-1 x)/(1 - x); pole at x = 1.
pub fn psi_eval(x: &Scalar) -> Result<Scalar, ScalarError> {
    let den = Scalar::one().sub(x);
    if den.is_zero() {
        return Err(ScalarError::Pole);
    }
    let num = Scalar::q_pow(1).sub(&Scalar::q_pow(-1).mul(x));
    num.div(&den).map_err(|_| ScalarError::Pole)
}

/// psi(x)^-1 = (1 - x)/(q - q^-1 x); the inverse is undefined at the zero
/// x = q^2 of psi.
pub fn psi_eval_inverse(x: &Scalar) -> Result<Scalar, ScalarError> {
    let den = Scalar::q_pow(1).sub(&Scalar::q_pow(-1).mul(x));
    if den.is_zero() {
        return Err(ScalarError::InverseOfZero);
    }
    let num = Scalar::one().sub(x);
    num.div(&den).map_err(|_| ScalarError::InverseOfZero)
}

/// Which geometric expansion of psi(cz)^sign to read modes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpandAt {
    Zero,
    Infinity,
}

/// Coefficient of z^m (at zero) or z^-m (at infinity) in the expansion of
/// psi(cz)^sign, where sign is +1 or -1.
pub fn psi_mode(c: &SpectralParam, sign: i8, direction: ExpandAt, m: u32) -> Scalar {
    psi_mode_mono(&c.as_scalar(), sign, direction, m)
}

/// Same as [`psi_mode`] with the geometric ratio given as a scalar (used for
/// composite arguments); `c` must be invertible, which holds for monomials.
pub fn psi_mode_mono(c: &Scalar, sign: i8, direction: ExpandAt, m: u32) -> Scalar {
    debug_assert!(sign == 1 || sign == -1);
    let cm = |k: i64| c.pow_i64(k).expect("monomial ratio invertible");
    let qq = Scalar::q_pow(1).sub(&Scalar::q_pow(-1));
    match (sign, direction, m) {
        (1, ExpandAt::Zero, 0) => Scalar::q_pow(1),
        (1, ExpandAt::Zero, m) => qq.mul(&cm(m as i64)),
        (1, ExpandAt::Infinity, 0) => Scalar::q_pow(-1),
        (1, ExpandAt::Infinity, m) => qq.neg().mul(&cm(-(m as i64))),
        (-1, ExpandAt::Zero, 0) => Scalar::q_pow(-1),
        (-1, ExpandAt::Zero, m) => qq.neg().mul(&Scalar::q_pow(-2 * m as i64)).mul(&cm(m as i64)),
        (-1, ExpandAt::Infinity, 0) => Scalar::q_pow(1),
        (-1, ExpandAt::Infinity, m) => qq.mul(&Scalar::q_pow(2 * m as i64)).mul(&cm(-(m as i64))),
        _ => unreachable!(),
    }
}
