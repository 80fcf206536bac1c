//! Tableau families and their sl-infinity crystal structure: weights,
//! Kashiwara operators, the tensor-product rule, the splice isomorphism
//! between half-infinite tensor pairs and finite rows, Weyl reflections and
//! extremal-orbit breadth-first search.

use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// A Dynkin node of the doubly infinite type A diagram.
pub type Node = i64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CrystalError {
    #[error("invalid tableau: {0}")]
    Invalid(String),
    #[error("tensor pair outside the spliceable set: {0}")]
    NotSpliceable(String),
}

/// An integral weight as its finitely supported pairings with the coroots.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct Weight {
    pairings: BTreeMap<Node, i64>,
}

impl Weight {
    pub fn new() -> Self {
        Weight::default()
    }

    pub fn from_pairs(pairs: &[(Node, i64)]) -> Self {
        let mut w = Weight::new();
        for &(i, v) in pairs {
            w.add_to(i, v);
        }
        w
    }

    pub fn get(&self, i: Node) -> i64 {
        self.pairings.get(&i).copied().unwrap_or(0)
    }

    pub fn add_to(&mut self, i: Node, v: i64) {
        let e = self.pairings.entry(i).or_insert(0);
        *e += v;
        if *e == 0 {
            self.pairings.remove(&i);
        }
    }

    pub fn add(&self, other: &Weight) -> Weight {
        let mut out = self.clone();
        for (&i, &v) in &other.pairings {
            out.add_to(i, v);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.pairings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Node, &i64)> {
        self.pairings.iter()
    }

    /// Adds c copies of the simple root alpha_i at the pairing level:
    /// alpha_i(h_j) is 2 at j = i and -1 at j = i +- 1.
    pub fn add_alpha(&mut self, i: Node, c: i64) {
        self.add_to(i, 2 * c);
        self.add_to(i - 1, -c);
        self.add_to(i + 1, -c);
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.pairings.iter().map(|(&i, &v)| json!({ "node": i, "pairing": v })).collect(),
        )
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pairings.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.pairings.iter().map(|(i, v)| format!("h_{i}:{v:+}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// The simple reflection s_i at the pairing level: lam - lam(h_i) alpha_i.
pub fn weyl_reflect(lam: &Weight, i: Node) -> Weight {
    let c = lam.get(i);
    let mut out = lam.clone();
    out.add_alpha(i, -c);
    out
}

/// A finite strictly increasing row (i_1 < ... < i_l), l >= 1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowTableau {
    entries: Vec<Node>,
}

impl RowTableau {
    pub fn new(entries: Vec<Node>) -> Result<Self, CrystalError> {
        if entries.is_empty() {
            return Err(CrystalError::Invalid("empty row".into()));
        }
        if !entries.windows(2).all(|w| w[0] < w[1]) {
            return Err(CrystalError::Invalid(format!("row not strictly increasing: {entries:?}")));
        }
        Ok(RowTableau { entries })
    }

    pub fn vacuum(l: usize) -> Self {
        RowTableau { entries: (1..=l as i64).collect() }
    }

    pub fn entries(&self) -> &[Node] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, m: Node) -> bool {
        self.entries.binary_search(&m).is_ok()
    }

    pub fn weight(&self) -> Weight {
        let mut w = Weight::new();
        for &e in &self.entries {
            w.add_to(e, 1);
            w.add_to(e - 1, -1);
        }
        w
    }

    /// Replaces i+1 by i; null when not exactly one of {i, i+1} is present.
    pub fn etilde(&self, i: Node) -> Option<RowTableau> {
        if !self.contains(i + 1) || self.contains(i) {
            return None;
        }
        let entries =
            self.entries.iter().map(|&e| if e == i + 1 { i } else { e }).collect::<Vec<_>>();
        Some(RowTableau { entries })
    }

    /// Replaces i by i+1; null when not exactly one of {i, i+1} is present.
    pub fn ftilde(&self, i: Node) -> Option<RowTableau> {
        if !self.contains(i) || self.contains(i + 1) {
            return None;
        }
        let entries =
            self.entries.iter().map(|&e| if e == i { i + 1 } else { e }).collect::<Vec<_>>();
        Some(RowTableau { entries })
    }

    pub fn text(&self) -> String {
        format!(
            "({})",
            self.entries.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("<")
        )
    }

    pub fn to_json(&self) -> Value {
        json!(self.entries)
    }
}

/// A finite semi-standard rectangle: l rows, k columns, strictly increasing
/// down columns, weakly increasing along rows. Stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RectTableau {
    rows: Vec<Vec<Node>>,
}

impl RectTableau {
    pub fn new(rows: Vec<Vec<Node>>) -> Result<Self, CrystalError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(CrystalError::Invalid("empty rectangle".into()));
        }
        let k = rows[0].len();
        if !rows.iter().all(|r| r.len() == k) {
            return Err(CrystalError::Invalid("ragged rectangle".into()));
        }
        for r in &rows {
            if !r.windows(2).all(|w| w[0] <= w[1]) {
                return Err(CrystalError::Invalid(format!("row not weakly increasing: {r:?}")));
            }
        }
        for j in 0..k {
            for i in 1..rows.len() {
                if rows[i - 1][j] >= rows[i][j] {
                    return Err(CrystalError::Invalid(format!(
                        "column {} not strictly increasing",
                        j + 1
                    )));
                }
            }
        }
        Ok(RectTableau { rows })
    }

    /// The extremal rectangle with every column equal to (1, ..., l).
    pub fn extremal(l: usize, k: usize) -> Self {
        RectTableau { rows: (1..=l as i64).map(|i| vec![i; k]).collect() }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.rows[0].len())
    }

    pub fn entry(&self, i: usize, j: usize) -> Node {
        self.rows[i - 1][j - 1]
    }

    pub fn rows(&self) -> &[Vec<Node>] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> RowTableau {
        RowTableau { entries: self.rows.iter().map(|r| r[j - 1]).collect() }
    }

    /// True when every row is a constant tuple.
    pub fn rows_constant(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|&e| e == r[0]))
    }

    pub fn weight(&self) -> Weight {
        let mut w = Weight::new();
        for r in &self.rows {
            for &e in r {
                w.add_to(e, 1);
                w.add_to(e - 1, -1);
            }
        }
        w
    }

    /// Crystal operators act through the tensor word of the columns taken
    /// right to left; this is the reading that keeps the semi-standard set
    /// closed under the fixed tensor convention.
    fn word(&self) -> TensorWord {
        let (_, k) = self.shape();
        TensorWord {
            factors: (1..=k).rev().map(|j| CrystalElem::Row(self.column(j))).collect(),
        }
    }

    fn from_word(w: &TensorWord) -> RectTableau {
        let cols: Vec<&RowTableau> = w
            .factors
            .iter()
            .rev()
            .map(|e| match e {
                CrystalElem::Row(r) => r,
                _ => unreachable!("rectangle word contains only columns"),
            })
            .collect();
        let l = cols[0].len();
        let rows: Vec<Vec<Node>> =
            (0..l).map(|i| cols.iter().map(|c| c.entries()[i]).collect()).collect();
        RectTableau::new(rows).expect("crystal operators preserve semi-standardness")
    }

    pub fn etilde(&self, i: Node) -> Option<RectTableau> {
        self.word().etilde(i).map(|w| RectTableau::from_word(&w))
    }

    pub fn ftilde(&self, i: Node) -> Option<RectTableau> {
        self.word().ftilde(i).map(|w| RectTableau::from_word(&w))
    }

    pub fn text(&self) -> String {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                format!("[{}]", r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","))
            })
            .collect();
        format!("[{}]", rows.join(","))
    }

    pub fn to_json(&self) -> Value {
        json!(self.rows)
    }
}

/// A half-infinite strict row (... < i_{l-1} < i_l) on positions p <= l with
/// i_p = p far to the left, stored as the crossover alpha and the finite
/// tail of entries above it.
///
/// Structure: entry(p) = p for p <= alpha, and the tail lists
/// (i_{alpha+1} < ... < i_l) with i_p > p for each; so alpha is exactly the
/// largest position with entry equal to position.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInfPlus {
    shape: i64,
    alpha: i64,
    tail: Vec<Node>,
}

impl HalfInfPlus {
    pub fn new(shape: i64, alpha: i64, tail: Vec<Node>) -> Result<Self, CrystalError> {
        if alpha > shape {
            return Err(CrystalError::Invalid(format!("alpha {alpha} exceeds shape {shape}")));
        }
        if tail.len() as i64 != shape - alpha {
            return Err(CrystalError::Invalid(format!(
                "tail length {} does not fill positions {}..={}",
                tail.len(),
                alpha + 1,
                shape
            )));
        }
        if !tail.windows(2).all(|w| w[0] < w[1]) {
            return Err(CrystalError::Invalid(format!("tail not strictly increasing: {tail:?}")));
        }
        for (t, &e) in tail.iter().enumerate() {
            let p = alpha + 1 + t as i64;
            if e <= p {
                return Err(CrystalError::Invalid(format!(
                    "tail entry {e} at position {p} not above the diagonal"
                )));
            }
        }
        Ok(HalfInfPlus { shape, alpha, tail })
    }

    pub fn vacuum(shape: i64) -> Self {
        HalfInfPlus { shape, alpha: shape, tail: Vec::new() }
    }

    pub fn shape(&self) -> i64 {
        self.shape
    }

    pub fn alpha(&self) -> i64 {
        self.alpha
    }

    pub fn tail(&self) -> &[Node] {
        &self.tail
    }

    pub fn is_vacuum(&self) -> bool {
        self.tail.is_empty()
    }

    pub fn entry(&self, p: i64) -> Node {
        debug_assert!(p <= self.shape);
        if p <= self.alpha {
            p
        } else {
            self.tail[(p - self.alpha - 1) as usize]
        }
    }

    pub fn contains(&self, m: Node) -> bool {
        m <= self.alpha || self.tail.contains(&m)
    }

    pub fn weight(&self) -> Weight {
        let mut w = Weight::new();
        let hi = self.tail.last().copied().unwrap_or(self.alpha);
        for m in self.alpha..=hi {
            let v = i64::from(self.contains(m)) - i64::from(self.contains(m + 1));
            w.add_to(m, v);
        }
        w
    }

    fn canonical(shape: i64, mut alpha: i64, mut tail: Vec<Node>) -> Self {
        while tail.first() == Some(&(alpha + 1)) {
            alpha += 1;
            tail.remove(0);
        }
        HalfInfPlus { shape, alpha, tail }
    }

    pub fn etilde(&self, i: Node) -> Option<HalfInfPlus> {
        if i <= self.alpha || !self.tail.contains(&(i + 1)) || self.tail.contains(&i) {
            // i <= alpha means i is present; otherwise i+1 must be present
            // in the tail and i absent everywhere.
            return None;
        }
        let tail: Vec<Node> =
            self.tail.iter().map(|&e| if e == i + 1 { i } else { e }).collect();
        Some(HalfInfPlus::canonical(self.shape, self.alpha, tail))
    }

    pub fn ftilde(&self, i: Node) -> Option<HalfInfPlus> {
        if i == self.alpha && !self.tail.contains(&(i + 1)) {
            let mut tail = vec![i + 1];
            tail.extend_from_slice(&self.tail);
            return Some(HalfInfPlus { shape: self.shape, alpha: self.alpha - 1, tail });
        }
        if i > self.alpha && self.tail.contains(&i) && !self.tail.contains(&(i + 1)) {
            let tail: Vec<Node> =
                self.tail.iter().map(|&e| if e == i { i + 1 } else { e }).collect();
            return Some(HalfInfPlus { shape: self.shape, alpha: self.alpha, tail });
        }
        None
    }

    pub fn text(&self) -> String {
        if self.is_vacuum() {
            "vac".to_string()
        } else {
            format!(
                "{{alpha={},tail=[{}]}}",
                self.alpha,
                self.tail.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
            )
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "alpha": self.alpha, "tail": self.tail })
    }
}

/// A half-infinite strict row on positions p >= s+1 with i_p = p far to the
/// right, stored as the crossover beta and the finite head of entries below
/// it; s is the anchor.
///
/// Structure: entry(p) = p for p >= beta, and the head lists
/// (i_{s+1} < ... < i_{beta-1}) with i_p < p for each.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInfMinus {
    anchor: i64,
    beta: i64,
    head: Vec<Node>,
}

impl HalfInfMinus {
    pub fn new(anchor: i64, beta: i64, head: Vec<Node>) -> Result<Self, CrystalError> {
        if beta < anchor + 1 {
            return Err(CrystalError::Invalid(format!("beta {beta} below anchor+1 {}", anchor + 1)));
        }
        if head.len() as i64 != beta - anchor - 1 {
            return Err(CrystalError::Invalid(format!(
                "head length {} does not fill positions {}..={}",
                head.len(),
                anchor + 1,
                beta - 1
            )));
        }
        if !head.windows(2).all(|w| w[0] < w[1]) {
            return Err(CrystalError::Invalid(format!("head not strictly increasing: {head:?}")));
        }
        for (t, &e) in head.iter().enumerate() {
            let p = anchor + 1 + t as i64;
            if e >= p {
                return Err(CrystalError::Invalid(format!(
                    "head entry {e} at position {p} not below the diagonal"
                )));
            }
        }
        Ok(HalfInfMinus { anchor, beta, head })
    }

    pub fn vacuum(anchor: i64) -> Self {
        HalfInfMinus { anchor, beta: anchor + 1, head: Vec::new() }
    }

    pub fn anchor(&self) -> i64 {
        self.anchor
    }

    pub fn beta(&self) -> i64 {
        self.beta
    }

    pub fn head(&self) -> &[Node] {
        &self.head
    }

    pub fn is_vacuum(&self) -> bool {
        self.head.is_empty()
    }

    pub fn entry(&self, p: i64) -> Node {
        debug_assert!(p >= self.anchor + 1);
        if p >= self.beta {
            p
        } else {
            self.head[(p - self.anchor - 1) as usize]
        }
    }

    pub fn contains(&self, m: Node) -> bool {
        m >= self.beta || self.head.contains(&m)
    }

    pub fn weight(&self) -> Weight {
        let mut w = Weight::new();
        let lo = self.head.first().copied().unwrap_or(self.beta).min(self.anchor);
        for m in lo - 1..=self.beta {
            let v = i64::from(self.contains(m)) - i64::from(self.contains(m + 1));
            w.add_to(m, v);
        }
        w
    }

    fn canonical(anchor: i64, mut beta: i64, mut head: Vec<Node>) -> Self {
        while head.last() == Some(&(beta - 1)) {
            beta -= 1;
            head.pop();
        }
        HalfInfMinus { anchor, beta, head }
    }

    pub fn etilde(&self, i: Node) -> Option<HalfInfMinus> {
        if i + 1 == self.beta {
            // Entry beta at position beta drops to beta-1; the vacuum part
            // starts one position later. The head never contains beta-1.
            let mut head = self.head.clone();
            head.push(i);
            return Some(HalfInfMinus { anchor: self.anchor, beta: self.beta + 1, head });
        }
        if i + 1 < self.beta && self.head.contains(&(i + 1)) && !self.head.contains(&i) {
            let head: Vec<Node> =
                self.head.iter().map(|&e| if e == i + 1 { i } else { e }).collect();
            return Some(HalfInfMinus { anchor: self.anchor, beta: self.beta, head });
        }
        None
    }

    pub fn ftilde(&self, i: Node) -> Option<HalfInfMinus> {
        if i >= self.beta || !self.head.contains(&i) || self.head.contains(&(i + 1)) {
            return None;
        }
        let head: Vec<Node> = self.head.iter().map(|&e| if e == i { i + 1 } else { e }).collect();
        Some(HalfInfMinus::canonical(self.anchor, self.beta, head))
    }

    pub fn text(&self) -> String {
        if self.is_vacuum() {
            "vac".to_string()
        } else {
            format!(
                "{{beta={},head=[{}]}}",
                self.beta,
                self.head.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
            )
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "beta": self.beta, "head": self.head })
    }
}

/// k half-infinite columns (T_{i,j})_{i <= l, 1 <= j <= k}: each column has
/// the [`HalfInfPlus`] structure, and rows are weakly increasing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KRTableau {
    cols: Vec<HalfInfPlus>,
}

impl KRTableau {
    pub fn new(cols: Vec<HalfInfPlus>) -> Result<Self, CrystalError> {
        if cols.is_empty() {
            return Err(CrystalError::Invalid("no columns".into()));
        }
        let l = cols[0].shape();
        if !cols.iter().all(|c| c.shape() == l) {
            return Err(CrystalError::Invalid("columns of unequal shape".into()));
        }
        let lo = cols.iter().map(|c| c.alpha()).min().unwrap();
        for w in cols.windows(2) {
            for i in lo..=l {
                if w[0].entry(i) > w[1].entry(i) {
                    return Err(CrystalError::Invalid(format!("row {i} not weakly increasing")));
                }
            }
        }
        Ok(KRTableau { cols })
    }

    pub fn vacuum(l: i64, k: usize) -> Self {
        KRTableau { cols: vec![HalfInfPlus::vacuum(l); k] }
    }

    pub fn shape(&self) -> (i64, usize) {
        (self.cols[0].shape(), self.cols.len())
    }

    pub fn column(&self, j: usize) -> &HalfInfPlus {
        &self.cols[j - 1]
    }

    pub fn entry(&self, i: i64, j: usize) -> Node {
        self.cols[j - 1].entry(i)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.cols.iter().map(|c| c.to_json()).collect())
    }
}

/// Any crystal element; tensor words nest.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CrystalElem {
    Row(RowTableau),
    Rect(RectTableau),
    HalfPlus(HalfInfPlus),
    HalfMinus(HalfInfMinus),
    Tensor(TensorWord),
}

/// An ordered, nonempty tensor word of crystal elements.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TensorWord {
    factors: Vec<CrystalElem>,
}

impl TensorWord {
    pub fn new(factors: Vec<CrystalElem>) -> Result<Self, CrystalError> {
        if factors.is_empty() {
            return Err(CrystalError::Invalid("empty tensor word".into()));
        }
        Ok(TensorWord { factors })
    }

    pub fn pair(a: CrystalElem, b: CrystalElem) -> Self {
        TensorWord { factors: vec![a, b] }
    }

    pub fn factors(&self) -> &[CrystalElem] {
        &self.factors
    }

    pub fn weight(&self) -> Weight {
        let mut w = Weight::new();
        for f in &self.factors {
            w = w.add(&f.weight());
        }
        w
    }

    fn split(&self) -> (&CrystalElem, Option<TensorWord>) {
        if self.factors.len() == 1 {
            (&self.factors[0], None)
        } else {
            (&self.factors[0], Some(TensorWord { factors: self.factors[1..].to_vec() }))
        }
    }

    fn rejoin(head: CrystalElem, rest: Option<TensorWord>) -> TensorWord {
        match rest {
            None => TensorWord { factors: vec![head] },
            Some(r) => {
                let mut factors = vec![head];
                factors.extend(r.factors);
                TensorWord { factors }
            }
        }
    }

    pub fn eps(&self, i: Node) -> i64 {
        let (u, rest) = self.split();
        match rest {
            None => u.eps(i),
            Some(v) => u.eps(i).max(v.eps(i) - u.weight().get(i)),
        }
    }

    pub fn phi(&self, i: Node) -> i64 {
        let (u, rest) = self.split();
        match rest {
            None => u.phi(i),
            Some(v) => v.phi(i).max(u.phi(i) + v.weight().get(i)),
        }
    }

    /// Tensor rule: etilde goes to the left factor iff phi(u) >= eps(v).
    pub fn etilde(&self, i: Node) -> Option<TensorWord> {
        let (u, rest) = self.split();
        match rest {
            None => u.etilde(i).map(|x| TensorWord { factors: vec![x] }),
            Some(v) => {
                if u.phi(i) >= v.eps(i) {
                    u.etilde(i).map(|x| TensorWord::rejoin(x, Some(v)))
                } else {
                    v.etilde(i).map(|x| TensorWord::rejoin(u.clone(), Some(x)))
                }
            }
        }
    }

    /// Tensor rule: ftilde goes to the left factor iff phi(u) > eps(v).
    pub fn ftilde(&self, i: Node) -> Option<TensorWord> {
        let (u, rest) = self.split();
        match rest {
            None => u.ftilde(i).map(|x| TensorWord { factors: vec![x] }),
            Some(v) => {
                if u.phi(i) > v.eps(i) {
                    u.ftilde(i).map(|x| TensorWord::rejoin(x, Some(v)))
                } else {
                    v.ftilde(i).map(|x| TensorWord::rejoin(u.clone(), Some(x)))
                }
            }
        }
    }

    pub fn text(&self) -> String {
        self.factors.iter().map(|f| f.text()).collect::<Vec<_>>().join(" (x) ")
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.factors.iter().map(|f| f.to_json()).collect())
    }
}

impl CrystalElem {
    pub fn weight(&self) -> Weight {
        match self {
            CrystalElem::Row(t) => t.weight(),
            CrystalElem::Rect(t) => t.weight(),
            CrystalElem::HalfPlus(t) => t.weight(),
            CrystalElem::HalfMinus(t) => t.weight(),
            CrystalElem::Tensor(w) => w.weight(),
        }
    }

    pub fn etilde(&self, i: Node) -> Option<CrystalElem> {
        match self {
            CrystalElem::Row(t) => t.etilde(i).map(CrystalElem::Row),
            CrystalElem::Rect(t) => t.etilde(i).map(CrystalElem::Rect),
            CrystalElem::HalfPlus(t) => t.etilde(i).map(CrystalElem::HalfPlus),
            CrystalElem::HalfMinus(t) => t.etilde(i).map(CrystalElem::HalfMinus),
            CrystalElem::Tensor(w) => w.etilde(i).map(CrystalElem::Tensor),
        }
    }

    pub fn ftilde(&self, i: Node) -> Option<CrystalElem> {
        match self {
            CrystalElem::Row(t) => t.ftilde(i).map(CrystalElem::Row),
            CrystalElem::Rect(t) => t.ftilde(i).map(CrystalElem::Rect),
            CrystalElem::HalfPlus(t) => t.ftilde(i).map(CrystalElem::HalfPlus),
            CrystalElem::HalfMinus(t) => t.ftilde(i).map(CrystalElem::HalfMinus),
            CrystalElem::Tensor(w) => w.ftilde(i).map(CrystalElem::Tensor),
        }
    }

    /// String length toward the highest-weight side: the number of times
    /// etilde applies in succession.
    pub fn eps(&self, i: Node) -> i64 {
        if let CrystalElem::Tensor(w) = self {
            return w.eps(i);
        }
        let mut n = 0;
        let mut cur = self.clone();
        while let Some(next) = cur.etilde(i) {
            n += 1;
            cur = next;
        }
        n
    }

    /// String length toward the lowest-weight side.
    pub fn phi(&self, i: Node) -> i64 {
        if let CrystalElem::Tensor(w) = self {
            return w.phi(i);
        }
        let mut n = 0;
        let mut cur = self.clone();
        while let Some(next) = cur.ftilde(i) {
            n += 1;
            cur = next;
        }
        n
    }

    pub fn text(&self) -> String {
        match self {
            CrystalElem::Row(t) => t.text(),
            CrystalElem::Rect(t) => t.text(),
            CrystalElem::HalfPlus(t) => t.text(),
            CrystalElem::HalfMinus(t) => t.text(),
            CrystalElem::Tensor(w) => w.text(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CrystalElem::Row(t) => t.to_json(),
            CrystalElem::Rect(t) => t.to_json(),
            CrystalElem::HalfPlus(t) => t.to_json(),
            CrystalElem::HalfMinus(t) => t.to_json(),
            CrystalElem::Tensor(w) => w.to_json(),
        }
    }
}

pub fn tensor_etilde(i: Node, w: &TensorWord) -> Option<TensorWord> {
    w.etilde(i)
}

pub fn tensor_ftilde(i: Node, w: &TensorWord) -> Option<TensorWord> {
    w.ftilde(i)
}

/// Membership in the spliceable set: alpha(T) >= beta(T') - 1, for shapes l
/// on the plus side and anchor 0 on the minus side.
pub fn in_t_ell(t: &HalfInfPlus, tp: &HalfInfMinus) -> bool {
    tp.anchor() == 0 && t.alpha() >= tp.beta() - 1
}

/// Splices a spliceable pair into the finite row of shape l: positions up to
/// alpha(T) read from the minus part, positions above from the plus part.
pub fn pi_iso(t: &HalfInfPlus, tp: &HalfInfMinus) -> Result<RowTableau, CrystalError> {
    if !in_t_ell(t, tp) {
        return Err(CrystalError::NotSpliceable(format!(
            "alpha {} < beta {} - 1",
            t.alpha(),
            tp.beta()
        )));
    }
    let l = t.shape();
    if l < 1 {
        return Err(CrystalError::Invalid(format!("shape {l} < 1")));
    }
    let entries: Vec<Node> = (1..=l)
        .map(|p| if p <= t.alpha() { tp.entry(p) } else { t.entry(p) })
        .collect();
    RowTableau::new(entries)
}

/// Inverse splice: position p of the plus part receives max(i_p, p), of the
/// minus part min(i_p, p), each extended by its vacuum.
pub fn pi_inv(row: &RowTableau) -> (HalfInfPlus, HalfInfMinus) {
    let l = row.len() as i64;
    let entries = row.entries();
    let plus_entries: Vec<Node> =
        (1..=l).map(|p| entries[(p - 1) as usize].max(p)).collect();
    let minus_entries: Vec<Node> =
        (1..=l).map(|p| entries[(p - 1) as usize].min(p)).collect();
    let alpha = (0..=l).rev().find(|&p| p == 0 || plus_entries[(p - 1) as usize] == p).unwrap();
    let tail = plus_entries[alpha as usize..].to_vec();
    let plus = HalfInfPlus::new(l, alpha, tail).expect("max part is valid");
    let beta = (1..=l)
        .find(|&p| minus_entries[(p - 1) as usize] == p)
        .unwrap_or(l + 1);
    let head = minus_entries[..(beta - 1) as usize].to_vec();
    let minus = HalfInfMinus::new(0, beta, head).expect("min part is valid");
    (plus, minus)
}

/// Step of the extremal-orbit walk at node i: ftilde^(c) when the pairing c
/// is nonnegative, etilde^(-c) otherwise. None when a step dies early, which
/// disproves extremality.
pub fn s_op(t: &CrystalElem, i: Node) -> Option<CrystalElem> {
    let c = t.weight().get(i);
    let mut cur = t.clone();
    for _ in 0..c.unsigned_abs() {
        cur = if c >= 0 { cur.ftilde(i)? } else { cur.etilde(i)? };
    }
    Some(cur)
}

/// Verdict of an extremal-orbit search: the orbit reached within depth and
/// every extremality failure found, as (element, node) witnesses.
#[derive(Clone, Debug)]
pub struct OrbitResult {
    pub elements: Vec<CrystalElem>,
    pub failures: Vec<(CrystalElem, Node)>,
}

impl OrbitResult {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Breadth-first search over reflection sequences from t, nodes drawn from
/// the window, at most depth steps; checks i-extremality of every reached
/// element at every window node: positive pairing must kill etilde, negative
/// must kill ftilde, zero must kill both.
pub fn extremal_orbit(t: &CrystalElem, window: (Node, Node), depth: usize) -> OrbitResult {
    use std::collections::BTreeSet;
    let check = |b: &CrystalElem, failures: &mut Vec<(CrystalElem, Node)>| {
        for i in window.0..=window.1 {
            let c = b.weight().get(i);
            let bad = if c > 0 {
                b.etilde(i).is_some()
            } else if c < 0 {
                b.ftilde(i).is_some()
            } else {
                b.etilde(i).is_some() || b.ftilde(i).is_some()
            };
            if bad {
                failures.push((b.clone(), i));
            }
        }
    };
    let mut seen: BTreeSet<CrystalElem> = BTreeSet::new();
    let mut failures = Vec::new();
    seen.insert(t.clone());
    check(t, &mut failures);
    let mut frontier = vec![t.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for b in &frontier {
            for i in window.0..=window.1 {
                match s_op(b, i) {
                    Some(sb) => {
                        if seen.insert(sb.clone()) {
                            check(&sb, &mut failures);
                            next.push(sb);
                        }
                    }
                    None => failures.push((b.clone(), i)),
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    OrbitResult { elements: seen.into_iter().collect(), failures }
}

/// All strict rows of length l with entries in [lo, hi].
pub fn enumerate_rows(l: usize, lo: Node, hi: Node) -> Vec<RowTableau> {
    let mut out = Vec::new();
    let mut cur: Vec<Node> = Vec::new();
    fn rec(l: usize, lo: Node, hi: Node, cur: &mut Vec<Node>, out: &mut Vec<RowTableau>) {
        if cur.len() == l {
            out.push(RowTableau::new(cur.clone()).unwrap());
            return;
        }
        let start = cur.last().map(|&e| e + 1).unwrap_or(lo);
        let remaining = (l - cur.len() - 1) as i64;
        for e in start..=hi - remaining {
            cur.push(e);
            rec(l, lo, hi, cur, out);
            cur.pop();
        }
    }
    if l >= 1 && hi - lo + 1 >= l as i64 {
        rec(l, lo, hi, &mut cur, &mut out);
    }
    out
}

/// All half-infinite plus rows of the given shape whose deviations fit the
/// window: every deviated position is >= lo (alpha >= lo-1) and every tail
/// entry is <= hi. The vacuum is always included.
pub fn enumerate_half_plus(shape: i64, lo: Node, hi: Node) -> Vec<HalfInfPlus> {
    let mut out = vec![HalfInfPlus::vacuum(shape)];
    for alpha in (lo - 1).min(shape)..shape {
        let tlen = (shape - alpha) as usize;
        // Tail entries at positions alpha+1..=shape, each above its position,
        // all distinct increasing, bounded by hi.
        for tail in enumerate_rows(tlen, alpha + 2, hi) {
            if let Ok(t) = HalfInfPlus::new(shape, alpha, tail.entries().to_vec()) {
                out.push(t);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// All half-infinite minus rows with the given anchor whose deviations fit
/// the window: every deviated position is <= hi (beta <= hi+1) and every
/// head entry is >= lo. The vacuum is always included.
pub fn enumerate_half_minus(anchor: i64, lo: Node, hi: Node) -> Vec<HalfInfMinus> {
    let mut out = vec![HalfInfMinus::vacuum(anchor)];
    for beta in (anchor + 2)..=(hi + 1).max(anchor + 1) {
        let hlen = (beta - anchor - 1) as usize;
        for head in enumerate_rows(hlen, lo, beta - 2) {
            if let Ok(t) = HalfInfMinus::new(anchor, beta, head.entries().to_vec()) {
                out.push(t);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// All semi-standard rectangles of shape (l, k) with entries in [lo, hi].
pub fn enumerate_rects(l: usize, k: usize, lo: Node, hi: Node) -> Vec<RectTableau> {
    let cols = enumerate_rows(l, lo, hi);
    let mut out: Vec<Vec<RowTableau>> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for partial in &out {
            for c in &cols {
                let ok = match partial.last() {
                    None => true,
                    Some(prev) => prev
                        .entries()
                        .iter()
                        .zip(c.entries())
                        .all(|(&a, &b)| a <= b),
                };
                if ok {
                    let mut np = partial.clone();
                    np.push(c.clone());
                    next.push(np);
                }
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|cols| {
            let rows: Vec<Vec<Node>> = (0..l)
                .map(|i| cols.iter().map(|c| c.entries()[i]).collect())
                .collect();
            RectTableau::new(rows).unwrap()
        })
        .collect()
}
