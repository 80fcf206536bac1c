//! Loop-weight calculus: Y-monomials over spectral parameters, box
//! monomials, the A_{i,a} family, tableau-to-monomial maps, q-characters,
//! the folding morphism to the cyclic diagram, and the string-decomposition
//! check used to certify folded characters.

use crate::crystal::{HalfInfMinus, HalfInfPlus, KRTableau, Node, RowTableau, Weight};
use crate::scalar::{register_symbol, symbol_name, ScalarError, SpectralParam};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;

/// Node domain: the doubly infinite diagram, or the cyclic diagram with
/// n+1 nodes (residues mod n+1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Domain {
    Aff,
    Tor(u32),
}

impl Domain {
    pub fn reduce(&self, i: Node) -> Node {
        match self {
            Domain::Aff => i,
            Domain::Tor(n) => i.rem_euclid(*n as i64 + 1),
        }
    }
}

/// A product of Y_{i,a}^e variables with no zero exponents; the node domain
/// is part of the value and never mixed across operands.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YMonomial {
    domain: Domain,
    exps: BTreeMap<(Node, SpectralParam), i64>,
}

impl YMonomial {
    pub fn one(domain: Domain) -> Self {
        YMonomial { domain, exps: BTreeMap::new() }
    }

    /// The single variable Y_{i,a}^e (node reduced in the domain).
    pub fn y(domain: Domain, i: Node, a: SpectralParam, e: i64) -> Self {
        let mut m = YMonomial::one(domain);
        m.push(i, a, e);
        m
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    fn push(&mut self, i: Node, a: SpectralParam, e: i64) {
        if e == 0 {
            return;
        }
        let key = (self.domain.reduce(i), a);
        let entry = self.exps.entry(key).or_insert(0);
        *entry += e;
        if *entry == 0 {
            self.exps.remove(&key);
        }
    }

    pub fn mul(&self, other: &YMonomial) -> YMonomial {
        assert_eq!(self.domain, other.domain, "mixed node domains");
        let mut out = self.clone();
        for (&(i, a), &e) in &other.exps {
            out.push(i, a, e);
        }
        out
    }

    pub fn inv(&self) -> YMonomial {
        YMonomial {
            domain: self.domain,
            exps: self.exps.iter().map(|(&k, &e)| (k, -e)).collect(),
        }
    }

    pub fn pow(&self, k: i64) -> YMonomial {
        if k == 0 {
            return YMonomial::one(self.domain);
        }
        YMonomial {
            domain: self.domain,
            exps: self.exps.iter().map(|(&key, &e)| (key, e * k)).collect(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exps(&self) -> impl Iterator<Item = (&(Node, SpectralParam), &i64)> {
        self.exps.iter()
    }

    pub fn exp_at(&self, i: Node, a: &SpectralParam) -> i64 {
        self.exps.get(&(self.domain.reduce(i), *a)).copied().unwrap_or(0)
    }

    /// Sum of exponents over all parameters at one node.
    pub fn node_exponent_sum(&self, i: Node) -> i64 {
        let i = self.domain.reduce(i);
        self.exps.iter().filter(|((n, _), _)| *n == i).map(|(_, &e)| e).sum()
    }

    /// Node-wise exponent sums as a weight (pairings with coroots).
    pub fn weight(&self) -> Weight {
        let mut w = Weight::new();
        for (&(i, _), &e) in &self.exps {
            w.add_to(i, e);
        }
        w
    }

    /// The positive entries at one node: (parameter, exponent).
    pub fn positive_at_node(&self, i: Node) -> Vec<(SpectralParam, i64)> {
        let i = self.domain.reduce(i);
        self.exps
            .iter()
            .filter(|&(&(n, _), &e)| n == i && e > 0)
            .map(|(&(_, a), &e)| (a, e))
            .collect()
    }

    pub fn touches_node(&self, i: Node) -> bool {
        let i = self.domain.reduce(i);
        self.exps.keys().any(|&(n, _)| n == i)
    }

    /// Keeps only the factors whose node lies in `lo..=hi`.
    pub fn restrict_nodes(&self, lo: Node, hi: Node) -> YMonomial {
        let exps = self
            .exps
            .iter()
            .filter(|&(&(n, _), _)| lo <= n && n <= hi)
            .map(|(k, &e)| (k.clone(), e))
            .collect();
        YMonomial { domain: self.domain, exps }
    }

    /// Applies the node-reduction ring morphism to the cyclic diagram with
    /// n+1 nodes; exponents at collided keys add and zero sums drop.
    pub fn fold(&self, n: u32) -> YMonomial {
        assert_eq!(self.domain, Domain::Aff, "fold expects the infinite diagram");
        let mut out = YMonomial::one(Domain::Tor(n));
        for (&(i, a), &e) in &self.exps {
            out.push(i, a, e);
        }
        out
    }

    /// Canonical text: `Y_{i,param}^e` factors space-joined, exponent 1
    /// omitted; `1` for the empty monomial.
    pub fn text(&self) -> String {
        if self.exps.is_empty() {
            return "1".to_string();
        }
        self.exps
            .iter()
            .map(|(&(i, a), &e)| {
                if e == 1 {
                    format!("Y_{{{},{}}}", i, a.text())
                } else {
                    format!("Y_{{{},{}}}^{}", i, a.text(), e)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.exps
                .iter()
                .map(|(&(i, a), &e)| {
                    json!({
                        "node": i,
                        "base": symbol_name(a.group),
                        "qexp": a.qexp,
                        "exp": e,
                    })
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value, domain: Domain) -> Result<Self, ScalarError> {
        let arr = v.as_array().ok_or_else(|| ScalarError::Parse("monomial: not an array".into()))?;
        let mut m = YMonomial::one(domain);
        for entry in arr {
            let node = entry
                .get("node")
                .and_then(|x| x.as_i64())
                .ok_or_else(|| ScalarError::Parse("monomial: bad node".into()))?;
            let base = entry
                .get("base")
                .and_then(|x| x.as_str())
                .ok_or_else(|| ScalarError::Parse("monomial: bad base".into()))?;
            let qexp = entry
                .get("qexp")
                .and_then(|x| x.as_i64())
                .ok_or_else(|| ScalarError::Parse("monomial: bad qexp".into()))?;
            let exp = entry
                .get("exp")
                .and_then(|x| x.as_i64())
                .ok_or_else(|| ScalarError::Parse("monomial: bad exp".into()))?;
            m.push(node, SpectralParam::new(register_symbol(base)?, qexp), exp);
        }
        Ok(m)
    }
}

impl fmt::Display for YMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text())
    }
}

/// A diagonal eigenvalue of the phi currents at one node: the rational
/// function prod_f psi(c_f q z)^{e_f}, stored as net exponents per parameter
/// c_f with zero exponents cancelled.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct PhiEigen {
    factors: BTreeMap<SpectralParam, i64>,
}

impl PhiEigen {
    pub fn one() -> Self {
        PhiEigen::default()
    }

    pub fn single(c: SpectralParam, e: i64) -> Self {
        let mut out = PhiEigen::one();
        out.push(c, e);
        out
    }

    pub fn push(&mut self, c: SpectralParam, e: i64) {
        if e == 0 {
            return;
        }
        let entry = self.factors.entry(c).or_insert(0);
        *entry += e;
        if *entry == 0 {
            self.factors.remove(&c);
        }
    }

    pub fn mul(&self, other: &PhiEigen) -> PhiEigen {
        let mut out = self.clone();
        for (&c, &e) in &other.factors {
            out.push(c, e);
        }
        out
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> impl Iterator<Item = (&SpectralParam, &i64)> {
        self.factors.iter()
    }
}

/// The loop-weight variable content of an eigenvalue at node i: each factor
/// (c, e) becomes Y_{i,c}^e.
pub fn lweight_monomial(e: &PhiEigen, i: Node) -> YMonomial {
    let mut m = YMonomial::one(Domain::Aff);
    for (&c, &n) in e.factors() {
        m = m.mul(&YMonomial::y(Domain::Aff, i, c, n));
    }
    m
}

/// Inverse of [`lweight_monomial`]: reads the node-i content of a monomial
/// back into an eigenvalue.
pub fn phi_of_monomial(m: &YMonomial, i: Node) -> PhiEigen {
    let mut out = PhiEigen::one();
    for (&(n, a), &e) in m.exps() {
        if n == i {
            out.push(a, e);
        }
    }
    out
}

/// The box variable for entry j at parameter a:
/// Y_{j-1, a q^j}^{-1} Y_{j, a q^{j-1}}.
pub fn box_mono(j: Node, a: SpectralParam) -> YMonomial {
    let mut m = YMonomial::one(Domain::Aff);
    m.push(j - 1, a.shift(j), -1);
    m.push(j, a.shift(j - 1), 1);
    m
}

/// A_{i,a} in the given domain:
/// Y_{i,aq^{-1}} Y_{i,aq} Y_{i-1,a}^{-1} Y_{i+1,a}^{-1}.
pub fn a_mono(domain: Domain, i: Node, a: SpectralParam) -> YMonomial {
    let mut m = YMonomial::one(domain);
    m.push(i, a.shift(-1), 1);
    m.push(i, a.shift(1), 1);
    m.push(i - 1, a, -1);
    m.push(i + 1, a, -1);
    m
}

/// A_{i,a}^{-1} in the given domain.
pub fn a_inv(domain: Domain, i: Node, a: SpectralParam) -> YMonomial {
    a_mono(domain, i, a).inv()
}

/// Monomial of a finite row of shape l at parameter a:
/// the product of box(i_j, a q^{l+1-2j}).
pub fn m_of_row(t: &RowTableau, a: SpectralParam) -> YMonomial {
    let l = t.len() as i64;
    let mut m = YMonomial::one(Domain::Aff);
    for (idx, &e) in t.entries().iter().enumerate() {
        let j = idx as i64 + 1;
        m = m.mul(&box_mono(e, a.shift(l + 1 - 2 * j)));
    }
    m
}

/// Monomial of a half-infinite plus row: the infinite diagonal part
/// telescopes to Y_{alpha, a q^{l-alpha}} and the tail contributes finitely.
pub fn m_of_half_plus(t: &HalfInfPlus, a: SpectralParam) -> YMonomial {
    let l = t.shape();
    let alpha = t.alpha();
    let mut m = YMonomial::y(Domain::Aff, alpha, a.shift(l - alpha), 1);
    for p in (alpha + 1)..=l {
        m = m.mul(&box_mono(t.entry(p), a.shift(l + 1 - 2 * p)));
    }
    m
}

/// Monomial of a half-infinite minus row with anchor s: the infinite
/// diagonal part telescopes to Y_{beta-1, a q^{s+1-beta}}^{-1} and the head
/// contributes finitely.
pub fn m_of_half_minus(t: &HalfInfMinus, a: SpectralParam) -> YMonomial {
    let s = t.anchor();
    let beta = t.beta();
    let mut m = YMonomial::y(Domain::Aff, beta - 1, a.shift(s + 1 - beta), -1);
    for p in (s + 1)..beta {
        m = m.mul(&box_mono(t.entry(p), a.shift(s + 1 - 2 * p)));
    }
    m
}

/// Monomial of a rectangular half-infinite tableau: column j contributes as
/// a half-infinite plus row at parameter a q^{2(j-1)}, which realizes the
/// cell formula box(T_{i,j}, a q^{l-1+2(j-i)}).
pub fn m_of_kr(t: &KRTableau, a: SpectralParam) -> YMonomial {
    let (_, k) = t.shape();
    let mut m = YMonomial::one(Domain::Aff);
    for j in 1..=k {
        m = m.mul(&m_of_half_plus(t.column(j), a.shift(2 * (j as i64 - 1))));
    }
    m
}

/// True iff every stored exponent at a node in j is nonnegative.
pub fn dominant_check(m: &YMonomial, j: &[Node]) -> bool {
    m.exps().all(|(&(n, _), &e)| e >= 0 || !j.contains(&n))
}

/// True iff every stored exponent is nonnegative.
pub fn dominant_check_all(m: &YMonomial) -> bool {
    m.exps().all(|(_, &e)| e >= 0)
}

/// A formal nonnegative-integer combination of Y-monomials.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct QCharacter {
    domain: Domain,
    terms: BTreeMap<YMonomial, u64>,
}

impl QCharacter {
    pub fn new(domain: Domain) -> Self {
        QCharacter { domain, terms: BTreeMap::new() }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn add_term(&mut self, m: YMonomial, mult: u64) {
        assert_eq!(m.domain(), self.domain, "mixed node domains");
        if mult > 0 {
            *self.terms.entry(m).or_insert(0) += mult;
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&YMonomial, &u64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.terms.values().sum()
    }

    pub fn multiplicity(&self, m: &YMonomial) -> u64 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    pub fn is_multiplicity_free(&self) -> bool {
        self.terms.values().all(|&c| c == 1)
    }

    pub fn fold(&self, n: u32) -> QCharacter {
        let mut out = QCharacter::new(Domain::Tor(n));
        for (m, &c) in &self.terms {
            out.add_term(m.fold(n), c);
        }
        out
    }

    pub fn text(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(|(m, &c)| if c == 1 { m.text() } else { format!("{c}*{}", m.text()) })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms.iter().map(|(m, &c)| json!({ "mono": m.to_json(), "mult": c })).collect(),
        )
    }

    pub fn from_json(v: &Value, domain: Domain) -> Result<Self, ScalarError> {
        let arr =
            v.as_array().ok_or_else(|| ScalarError::Parse("character: not an array".into()))?;
        let mut chi = QCharacter::new(domain);
        for entry in arr {
            let mono = entry
                .get("mono")
                .ok_or_else(|| ScalarError::Parse("character: missing mono".into()))?;
            let mult = entry
                .get("mult")
                .and_then(|x| x.as_u64())
                .ok_or_else(|| ScalarError::Parse("character: bad mult".into()))?;
            chi.add_term(YMonomial::from_json(mono, domain)?, mult);
        }
        Ok(chi)
    }
}

/// Sum of row monomials over all rows of shape l with entries in [lo, hi].
pub fn qchar_row(l: usize, a: SpectralParam, lo: Node, hi: Node) -> QCharacter {
    let mut chi = QCharacter::new(Domain::Aff);
    for t in crate::crystal::enumerate_rows(l, lo, hi) {
        chi.add_term(m_of_row(&t, a), 1);
    }
    chi
}

/// One matched string: the head monomial and the expansion corners
/// (monomial, multiplicity) that were consumed for it, head included.
#[derive(Clone, Debug)]
pub struct MatchedString {
    pub head: YMonomial,
    pub corners: Vec<(YMonomial, u64)>,
}

/// An unmatched term of a string decomposition together with the absent
/// partner monomials its string would have needed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StringWitness {
    pub monomial: YMonomial,
    pub missing: Vec<YMonomial>,
}

/// Outcome of a string decomposition at one node.
#[derive(Clone, Debug)]
pub struct StringDecomposition {
    pub node: Node,
    pub strings: Vec<MatchedString>,
    /// Terms without any variable at the node; they stand alone.
    pub singles: Vec<(YMonomial, u64)>,
    /// Terms that could not be matched: a required corner was absent, or a
    /// leftover term still touches the node.
    pub witnesses: Vec<StringWitness>,
}

impl StringDecomposition {
    pub fn ok(&self) -> bool {
        self.witnesses.is_empty()
    }
}

fn binom(n: i64, k: i64) -> u64 {
    if k < 0 || k > n {
        return 0;
    }
    let mut out: u64 = 1;
    for t in 0..k {
        out = out * (n - t) as u64 / (t as u64 + 1);
    }
    out
}

/// Greedy partition of the character at one node into strings
/// m * prod_c (1 + A_{r,cq}^{-1})^{e_c} over the positive entries (c, e_c)
/// of the head m, heads taken lowest-parameter first. Every corner of the
/// expansion must be present with sufficient multiplicity; unmatched heads
/// or leftovers touching the node are reported as witnesses.
pub fn string_decompose(chi: &QCharacter, r: Node) -> StringDecomposition {
    let domain = chi.domain();
    let r = domain.reduce(r);
    let mut work: BTreeMap<YMonomial, u64> =
        chi.terms().map(|(m, &c)| (m.clone(), c)).collect();
    let mut strings = Vec::new();
    let mut witnesses = Vec::new();
    loop {
        // Lowest positive parameter first, then full monomial order.
        let head = work
            .iter()
            .filter(|(m, &c)| c > 0 && !m.positive_at_node(r).is_empty())
            .map(|(m, _)| {
                let min = m
                    .positive_at_node(r)
                    .iter()
                    .map(|&(a, _)| (a.qexp, a.group))
                    .min()
                    .unwrap();
                (min, m.clone())
            })
            .min()
            .map(|(_, m)| m);
        let Some(head) = head else { break };
        let mult = work[&head];
        let directions = head.positive_at_node(r);
        // Corners of prod (1 + A^{-1})^{e_c}: choose k_c of each direction.
        let mut corners: Vec<(YMonomial, u64)> = vec![(head.clone(), 1)];
        for &(c, e) in &directions {
            let step = a_inv(domain, r, c.shift(1));
            let mut next = Vec::new();
            for (m, cnt) in &corners {
                let mut acc = m.clone();
                for k in 0..=e {
                    if k > 0 {
                        acc = acc.mul(&step);
                    }
                    next.push((acc.clone(), cnt * binom(e, k)));
                }
            }
            corners = next;
        }
        let mut consumed: BTreeMap<YMonomial, u64> = BTreeMap::new();
        for (m, cnt) in &corners {
            *consumed.entry(m.clone()).or_insert(0) += cnt * mult;
        }
        let missing: Vec<YMonomial> = consumed
            .iter()
            .filter(|(m, &need)| work.get(*m).copied().unwrap_or(0) < need)
            .map(|(m, _)| m.clone())
            .collect();
        if missing.is_empty() {
            for (m, need) in &consumed {
                let c = work.get_mut(m).unwrap();
                *c -= need;
                if *c == 0 {
                    work.remove(m);
                }
            }
            strings.push(MatchedString {
                head,
                corners: consumed.into_iter().collect(),
            });
        } else {
            witnesses.push(StringWitness { monomial: head.clone(), missing });
            work.remove(&head);
        }
    }
    let mut singles = Vec::new();
    for (m, c) in work {
        if m.touches_node(r) {
            // A leftover has only negative entries at the node; the heads
            // one string step up are the partners it lacked.
            let missing = m
                .exps()
                .filter(|&(&(n, _), &e)| n == r && e < 0)
                .map(|(&(_, p), _)| m.mul(&a_inv(domain, r, p.shift(-1)).inv()))
                .collect();
            witnesses.push(StringWitness { monomial: m, missing });
        } else {
            singles.push((m, c));
        }
    }
    StringDecomposition { node: r, strings, singles, witnesses }
}
