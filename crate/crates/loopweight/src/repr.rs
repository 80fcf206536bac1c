//! Explicit loop modules with tableau bases: delta-supported raising and
//! lowering actions, diagonal eigenvalues of the commuting currents, binary
//! fusion that dresses one side's action with the other side's eigenvalue
//! evaluated at the delta support, windowed truncation, and span checks.
//!
//! Actions are stored exactly. `x_series` returns finitely many
//! [`DeltaTerm`]s, so the mode-r operator is the finite sum
//! `sum_t coeff_t * support_t^r * target_t` simultaneously for every
//! integer r.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::crystal::{
    enumerate_half_minus, enumerate_half_plus, enumerate_rects, enumerate_rows, CrystalError,
    HalfInfMinus, HalfInfPlus, Node, RectTableau, RowTableau, Weight,
};
use crate::monomial::PhiEigen;
use crate::scalar::{psi_mode, qfactorial, ExpandAt, Mono, Scalar, ScalarError, SpectralParam};

/// Which current family acts: `Plus` lowers a tableau entry by one,
/// `Minus` raises it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "x+",
            Sign::Minus => "x-",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReprError {
    /// A delta support of one fusion factor landed on a pole of the other
    /// factor's eigenvalue with a nonzero coefficient attached.
    #[error("fusion undefined at node {node} on {vector}: eigenvalue pole at support {}", point.text())]
    FusionUndefined {
        node: Node,
        vector: BasisVector,
        point: SpectralParam,
    },
    #[error("vector does not belong to the module: {0}")]
    NotInModule(String),
    #[error("bad vector json: {0}")]
    Json(String),
    #[error(transparent)]
    Crystal(#[from] CrystalError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// A basis vector of a loop module: a tableau of the appropriate family
/// attached to a spectral parameter, or a flat tensor of such.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BasisVector {
    Row(RowTableau, SpectralParam),
    Rect(RectTableau, SpectralParam),
    HalfPlus(HalfInfPlus, SpectralParam),
    HalfMinus(HalfInfMinus, SpectralParam),
    Tensor(Vec<BasisVector>),
}

impl BasisVector {
    pub fn weight(&self) -> Weight {
        match self {
            BasisVector::Row(t, _) => t.weight(),
            BasisVector::Rect(t, _) => t.weight(),
            BasisVector::HalfPlus(t, _) => t.weight(),
            BasisVector::HalfMinus(t, _) => t.weight(),
            BasisVector::Tensor(fs) => {
                let mut w = Weight::new();
                for f in fs {
                    w = w.add(&f.weight());
                }
                w
            }
        }
    }

    pub fn text(&self) -> String {
        match self {
            BasisVector::Row(t, p) => {
                if t.len() == 1 {
                    format!("[{}]@{}", t.entries()[0], p.text())
                } else {
                    format!("{}@{}", t.text(), p.text())
                }
            }
            BasisVector::Rect(t, p) => format!("{}@{}", t.text(), p.text()),
            BasisVector::HalfPlus(t, p) => format!("{}@{}", t.text(), p.text()),
            BasisVector::HalfMinus(t, p) => format!("{}@{}", t.text(), p.text()),
            BasisVector::Tensor(fs) => fs
                .iter()
                .map(|f| f.text())
                .collect::<Vec<_>>()
                .join(" (x) "),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            BasisVector::Row(t, p) => json!({
                "family": "row",
                "param": p.text(),
                "entries": t.entries(),
            }),
            BasisVector::Rect(t, p) => json!({
                "family": "rect",
                "param": p.text(),
                "rows": t.rows(),
            }),
            BasisVector::HalfPlus(t, p) => json!({
                "family": "half_plus",
                "param": p.text(),
                "shape": t.shape(),
                "alpha": t.alpha(),
                "tail": t.tail(),
            }),
            BasisVector::HalfMinus(t, p) => json!({
                "family": "half_minus",
                "param": p.text(),
                "anchor": t.anchor(),
                "beta": t.beta(),
                "head": t.head(),
            }),
            BasisVector::Tensor(fs) => json!({
                "family": "tensor",
                "factors": fs.iter().map(|f| f.to_json()).collect::<Vec<_>>(),
            }),
        }
    }

    pub fn from_json(v: &Value) -> Result<BasisVector, ReprError> {
        let obj = v
            .as_object()
            .ok_or_else(|| ReprError::Json("vector: not an object".into()))?;
        let family = obj
            .get("family")
            .and_then(|f| f.as_str())
            .ok_or_else(|| ReprError::Json("vector: missing family".into()))?;
        let param = |key: &str| -> Result<SpectralParam, ReprError> {
            let s = obj
                .get(key)
                .and_then(|p| p.as_str())
                .ok_or_else(|| ReprError::Json("vector: missing param".into()))?;
            Ok(SpectralParam::parse(s)?)
        };
        let nodes = |key: &str| -> Result<Vec<Node>, ReprError> {
            obj.get(key)
                .and_then(|e| e.as_array())
                .ok_or_else(|| ReprError::Json(format!("vector: missing {key}")))?
                .iter()
                .map(|x| {
                    x.as_i64()
                        .ok_or_else(|| ReprError::Json(format!("vector: bad entry in {key}")))
                })
                .collect()
        };
        let int = |key: &str| -> Result<i64, ReprError> {
            obj.get(key)
                .and_then(|x| x.as_i64())
                .ok_or_else(|| ReprError::Json(format!("vector: missing {key}")))
        };
        match family {
            "row" => Ok(BasisVector::Row(
                RowTableau::new(nodes("entries")?)?,
                param("param")?,
            )),
            "rect" => {
                let rows = obj
                    .get("rows")
                    .and_then(|r| r.as_array())
                    .ok_or_else(|| ReprError::Json("vector: missing rows".into()))?
                    .iter()
                    .map(|row| {
                        row.as_array()
                            .ok_or_else(|| ReprError::Json("vector: bad row".into()))?
                            .iter()
                            .map(|x| {
                                x.as_i64()
                                    .ok_or_else(|| ReprError::Json("vector: bad cell".into()))
                            })
                            .collect::<Result<Vec<Node>, _>>()
                    })
                    .collect::<Result<Vec<Vec<Node>>, _>>()?;
                Ok(BasisVector::Rect(RectTableau::new(rows)?, param("param")?))
            }
            "half_plus" => Ok(BasisVector::HalfPlus(
                HalfInfPlus::new(int("shape")?, int("alpha")?, nodes("tail")?)?,
                param("param")?,
            )),
            "half_minus" => Ok(BasisVector::HalfMinus(
                HalfInfMinus::new(int("anchor")?, int("beta")?, nodes("head")?)?,
                param("param")?,
            )),
            "tensor" => {
                let fs = obj
                    .get("factors")
                    .and_then(|f| f.as_array())
                    .ok_or_else(|| ReprError::Json("vector: missing factors".into()))?
                    .iter()
                    .map(BasisVector::from_json)
                    .collect::<Result<Vec<_>, _>>()?;
                if fs.len() < 2 {
                    return Err(ReprError::Json("vector: tensor needs >= 2 factors".into()));
                }
                Ok(BasisVector::Tensor(fs))
            }
            other => Err(ReprError::Json(format!("vector: unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for BasisVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Shallow factor list: a tensor yields its factors, anything else itself.
fn factors_of(v: &BasisVector) -> Vec<BasisVector> {
    match v {
        BasisVector::Tensor(fs) => fs.clone(),
        other => vec![other.clone()],
    }
}

/// Inverse of [`factors_of`]: one factor stays bare, several become a tensor.
fn group(facs: Vec<BasisVector>) -> BasisVector {
    let mut facs = facs;
    match facs.len() {
        0 => panic!("empty tensor"),
        1 => facs.pop().unwrap(),
        _ => BasisVector::Tensor(facs),
    }
}

fn tensor_concat(a: BasisVector, b: BasisVector) -> BasisVector {
    let mut fs = factors_of(&a);
    fs.extend(factors_of(&b));
    group(fs)
}

/// One term of a current action: the coefficient of the delta series
/// supported at `support`, sending the source to `target`. The mode-r
/// component is `coeff * support^r * target`.
///
/// Invariant: `coeff` is nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaTerm {
    pub support: SpectralParam,
    pub coeff: Scalar,
    pub target: BasisVector,
}

impl DeltaTerm {
    pub fn to_json(&self) -> Value {
        json!({
            "support": self.support.text(),
            "coeff": self.coeff.to_json(),
            "target": self.target.to_json(),
        })
    }
}

fn merge_delta_terms(raw: Vec<DeltaTerm>) -> Vec<DeltaTerm> {
    let mut acc: BTreeMap<(SpectralParam, BasisVector), Scalar> = BTreeMap::new();
    for dt in raw {
        let entry = acc
            .entry((dt.support, dt.target))
            .or_insert_with(Scalar::zero);
        *entry = entry.add(&dt.coeff);
    }
    acc.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((support, target), coeff)| DeltaTerm {
            support,
            coeff,
            target,
        })
        .collect()
}

/// A finite linear combination of basis vectors with exact coefficients.
/// Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinComb {
    terms: BTreeMap<BasisVector, Scalar>,
}

impl LinComb {
    pub fn zero() -> Self {
        LinComb::default()
    }

    pub fn singleton(v: BasisVector) -> Self {
        let mut out = LinComb::zero();
        out.add_term(v, Scalar::one());
        out
    }

    pub fn add_term(&mut self, v: BasisVector, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(v).or_insert_with(Scalar::zero);
        *entry = entry.add(&c);
        if entry.is_zero() {
            let key = self
                .terms
                .iter()
                .find(|(_, s)| s.is_zero())
                .map(|(k, _)| k.clone())
                .unwrap();
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, v: &BasisVector) -> Scalar {
        self.terms.get(v).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisVector, &Scalar)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &LinComb) -> LinComb {
        let mut out = self.clone();
        for (v, c) in other.iter() {
            out.add_term(v.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &LinComb) -> LinComb {
        let mut out = self.clone();
        for (v, c) in other.iter() {
            out.add_term(v.clone(), c.neg());
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> LinComb {
        let mut out = LinComb::zero();
        for (v, s) in self.iter() {
            out.add_term(v.clone(), s.mul(c));
        }
        out
    }

    /// Relabels every basis vector through `f`, keeping coefficients.
    pub fn map_vectors<E>(
        &self,
        f: impl Fn(&BasisVector) -> Result<BasisVector, E>,
    ) -> Result<LinComb, E> {
        let mut out = LinComb::zero();
        for (v, c) in self.iter() {
            out.add_term(f(v)?, c.clone());
        }
        Ok(out)
    }

    pub fn text(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        self.iter()
            .map(|(v, c)| format!("{}\u{b7}{}", c.text(), v.text()))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.iter()
                .map(|(v, c)| json!({ "vector": v.to_json(), "scalar": c.to_json() }))
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<LinComb, ReprError> {
        let arr = v
            .as_array()
            .ok_or_else(|| ReprError::Json("lincomb: not an array".into()))?;
        let mut out = LinComb::zero();
        for item in arr {
            let obj = item
                .as_object()
                .ok_or_else(|| ReprError::Json("lincomb: bad term".into()))?;
            let vec = obj
                .get("vector")
                .ok_or_else(|| ReprError::Json("lincomb: missing vector".into()))?;
            let sc = obj
                .get("scalar")
                .ok_or_else(|| ReprError::Json("lincomb: missing scalar".into()))?;
            out.add_term(BasisVector::from_json(vec)?, Scalar::from_json(sc)?);
        }
        Ok(out)
    }
}

impl fmt::Display for LinComb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Evaluates `prod_f psi(c_f q z)^{e_f}` at the point `z = support^{-1}` as
/// an exact scalar. Numerator and denominator factors that agree as
/// monomials cancel before anything is evaluated; a surviving vanishing
/// numerator gives `Some(0)`, a surviving vanishing denominator gives
/// `None` (a genuine pole).
fn eval_eigen_at(e: &PhiEigen, support: &SpectralParam) -> Option<Scalar> {
    let mut unit = 0i64;
    let mut keys: BTreeMap<Mono, i64> = BTreeMap::new();
    for (c, &n) in e.factors() {
        unit += n;
        // psi(w) = q (1 - q^{-2} w) / (1 - w) with w = c q / support.
        let w = c.shift(1).ratio_mono(support);
        *keys.entry(w.mul(&Mono::q_pow(-2))).or_insert(0) += n;
        *keys.entry(w).or_insert(0) -= n;
    }
    let mut zero_order = 0i64;
    let mut acc = Scalar::q_pow(unit);
    for (g, n) in keys {
        if n == 0 {
            continue;
        }
        if g.is_one() {
            zero_order += n;
        } else {
            let f = Scalar::one().sub(&Scalar::from_mono(g));
            acc = acc.mul(&f.pow_i64(n).expect("factor 1-g with g != 1 is invertible"));
        }
    }
    if zero_order > 0 {
        return Some(Scalar::zero());
    }
    if zero_order < 0 {
        return None;
    }
    Some(acc)
}

/// Position (1-based from the top of the column shape) of the value `v` in
/// a finite strict row, if present.
fn row_position(t: &RowTableau, v: Node) -> Option<i64> {
    t.entries()
        .iter()
        .position(|&e| e == v)
        .map(|idx| idx as i64 + 1)
}

/// The delta term data of a current acting on a finite strict row of
/// length l: the 1-based position that moves and the moved row.
fn row_x_term(t: &RowTableau, sign: Sign, i: Node) -> Option<(i64, RowTableau)> {
    let needle = match sign {
        Sign::Plus => i + 1,
        Sign::Minus => i,
    };
    let pos = row_position(t, needle)?;
    let target = match sign {
        Sign::Plus => t.etilde(i),
        Sign::Minus => t.ftilde(i),
    }?;
    Some((pos, target))
}

/// The eigen factor of a finite strict row at node i: `(position, sign)`
/// where sign +1 marks an entry i with no i+1 after it and -1 an entry
/// i+1 with no i before it. At most one applies.
fn row_phi_factor(t: &RowTableau, i: Node) -> Option<(i64, i8)> {
    let es = t.entries();
    let n = es.len();
    if let Some(idx) = es.iter().position(|&e| e == i + 1) {
        if idx == 0 || es[idx - 1] != i {
            return Some((idx as i64 + 1, -1));
        }
    }
    if let Some(idx) = es.iter().position(|&e| e == i) {
        if idx + 1 == n || es[idx + 1] != i + 1 {
            return Some((idx as i64 + 1, 1));
        }
    }
    None
}

/// Position of the value `v` in a half-infinite plus row (positions run up
/// to the shape; the vacuum part has entry p at position p).
fn half_plus_position(t: &HalfInfPlus, v: Node) -> Option<i64> {
    if v <= t.alpha() {
        return Some(v);
    }
    t.tail()
        .iter()
        .position(|&e| e == v)
        .map(|idx| t.alpha() + 1 + idx as i64)
}

fn half_plus_phi_factor(t: &HalfInfPlus, i: Node) -> Option<(i64, i8)> {
    if let Some(pos) = half_plus_position(t, i + 1) {
        if t.entry(pos - 1) != i {
            return Some((pos, -1));
        }
    }
    if let Some(pos) = half_plus_position(t, i) {
        if pos == t.shape() || t.entry(pos + 1) != i + 1 {
            return Some((pos, 1));
        }
    }
    None
}

/// Position of the value `v` in a half-infinite minus row (positions run
/// down to anchor+1; the vacuum part has entry p at position p).
fn half_minus_position(t: &HalfInfMinus, v: Node) -> Option<i64> {
    if v >= t.beta() {
        return Some(v);
    }
    t.head()
        .iter()
        .position(|&e| e == v)
        .map(|idx| t.anchor() + 1 + idx as i64)
}

fn half_minus_phi_factor(t: &HalfInfMinus, i: Node) -> Option<(i64, i8)> {
    let first = t.anchor() + 1;
    if let Some(pos) = half_minus_position(t, i + 1) {
        if pos == first || t.entry(pos - 1) != i {
            return Some((pos, -1));
        }
    }
    if let Some(pos) = half_minus_position(t, i) {
        if t.entry(pos + 1) != i + 1 {
            return Some((pos, 1));
        }
    }
    None
}

/// A loop module given by its construction. Basis vectors of `Fused` (and
/// of `Column`, which is a chain of vector factors) are flat tensors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoopModule {
    /// Half-infinite rows of the given shape deviating from the vacuum in
    /// finitely many places above.
    FundPlus { l: i64, a: SpectralParam },
    /// Half-infinite rows anchored below at s, deviating downward.
    FundMinus { s: i64, a: SpectralParam },
    /// Single boxes.
    Vector { a: SpectralParam },
    /// Finite strict rows of length l.
    Efl { l: i64, a: SpectralParam },
    /// A chain of k vector factors at parameters a, a q^{-2}, ...; basis
    /// restricted to strictly increasing tuples.
    Column { k: i64, a: SpectralParam },
    /// Semi-standard l x k rectangles realized inside the chain of the
    /// l*k cell factors, column-major, cell (i, j) at a q^{-2(i-j)}.
    Rect { l: i64, k: i64, a: SpectralParam },
    /// Binary fusion along the coproduct.
    Fused {
        left: Box<LoopModule>,
        right: Box<LoopModule>,
    },
}

fn vector_chain(params: Vec<SpectralParam>) -> LoopModule {
    let mut it = params.into_iter();
    let first = LoopModule::Vector {
        a: it.next().expect("nonempty chain"),
    };
    it.fold(first, |acc, p| LoopModule::Fused {
        left: Box::new(acc),
        right: Box::new(LoopModule::Vector { a: p }),
    })
}

fn column_chain(k: i64, a: SpectralParam) -> LoopModule {
    vector_chain((0..k).map(|j| a.shift(-2 * j)).collect())
}

fn rect_chain(l: i64, k: i64, a: SpectralParam) -> LoopModule {
    let mut params = Vec::new();
    for j in 1..=k {
        for i in 1..=l {
            params.push(a.shift(-2 * (i - j)));
        }
    }
    vector_chain(params)
}

fn rect_flatten(t: &RectTableau, p: SpectralParam) -> BasisVector {
    let (l, k) = t.shape();
    let mut facs = Vec::new();
    for j in 1..=k {
        for i in 1..=l {
            facs.push(BasisVector::Row(
                RowTableau::new(vec![t.entry(i, j)]).unwrap(),
                p.shift(-2 * (i as i64 - j as i64)),
            ));
        }
    }
    group(facs)
}

fn rect_reassemble(v: &BasisVector, l: i64, k: i64) -> Result<RectTableau, CrystalError> {
    let facs = factors_of(v);
    let mut rows = vec![vec![0i64; k as usize]; l as usize];
    for (s, f) in facs.iter().enumerate() {
        let entry = match f {
            BasisVector::Row(t, _) => t.entries()[0],
            other => panic!("rectangle chain produced a non-box factor: {other}"),
        };
        let j = s as i64 / l;
        let i = s as i64 % l;
        rows[i as usize][j as usize] = entry;
    }
    RectTableau::new(rows)
}

fn column_tuple(v: &BasisVector) -> Vec<Node> {
    factors_of(v)
        .iter()
        .map(|f| match f {
            BasisVector::Row(t, _) => t.entries()[0],
            other => panic!("column chain produced a non-box factor: {other}"),
        })
        .collect()
}

fn column_vector(entries: &[Node], a: SpectralParam) -> BasisVector {
    group(
        entries
            .iter()
            .enumerate()
            .map(|(j, &e)| {
                BasisVector::Row(RowTableau::new(vec![e]).unwrap(), a.shift(-2 * j as i64))
            })
            .collect(),
    )
}

impl LoopModule {
    pub fn fundamental_plus(l: i64, a: SpectralParam) -> LoopModule {
        assert!(l >= 0, "shape must be nonnegative");
        LoopModule::FundPlus { l, a }
    }

    pub fn fundamental_minus(s: i64, a: SpectralParam) -> LoopModule {
        LoopModule::FundMinus { s, a }
    }

    pub fn vector_rep(a: SpectralParam) -> LoopModule {
        LoopModule::Vector { a }
    }

    pub fn efl(l: i64, a: SpectralParam) -> LoopModule {
        assert!(l >= 1, "row length must be positive");
        LoopModule::Efl { l, a }
    }

    pub fn column(k: i64, a: SpectralParam) -> LoopModule {
        assert!(k >= 1, "column height must be positive");
        LoopModule::Column { k, a }
    }

    pub fn rect(l: i64, k: i64, a: SpectralParam) -> LoopModule {
        assert!(l >= 1 && k >= 1, "rectangle shape must be positive");
        LoopModule::Rect { l, k, a }
    }

    pub fn fuse(left: LoopModule, right: LoopModule) -> LoopModule {
        LoopModule::Fused {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Left-nested fusion of a nonempty list of modules.
    pub fn fuse_chain(mods: impl IntoIterator<Item = LoopModule>) -> LoopModule {
        let mut it = mods.into_iter();
        let first = it.next().expect("nonempty fusion chain");
        it.fold(first, LoopModule::fuse)
    }

    /// Number of flat tensor slots in a basis vector of this module.
    pub fn arity(&self) -> usize {
        match self {
            LoopModule::FundPlus { .. }
            | LoopModule::FundMinus { .. }
            | LoopModule::Vector { .. }
            | LoopModule::Efl { .. }
            | LoopModule::Rect { .. } => 1,
            LoopModule::Column { k, .. } => *k as usize,
            LoopModule::Fused { left, right } => left.arity() + right.arity(),
        }
    }

    /// The canonical seed vector used by truncation.
    pub fn generator(&self) -> BasisVector {
        match self {
            LoopModule::FundPlus { l, a } => BasisVector::HalfPlus(HalfInfPlus::vacuum(*l), *a),
            LoopModule::FundMinus { s, a } => BasisVector::HalfMinus(HalfInfMinus::vacuum(*s), *a),
            LoopModule::Vector { a } => BasisVector::Row(RowTableau::new(vec![1]).unwrap(), *a),
            LoopModule::Efl { l, a } => {
                BasisVector::Row(RowTableau::vacuum(*l as usize), *a)
            }
            LoopModule::Column { k, a } => {
                let tuple: Vec<Node> = (1..=*k).collect();
                column_vector(&tuple, *a)
            }
            LoopModule::Rect { l, k, a } => {
                BasisVector::Rect(RectTableau::extremal(*l as usize, *k as usize), *a)
            }
            LoopModule::Fused { left, right } => {
                tensor_concat(left.generator(), right.generator())
            }
        }
    }

    fn split_pair(&self, v: &BasisVector) -> Result<(BasisVector, BasisVector), ReprError> {
        let left = match self {
            LoopModule::Fused { left, .. } => left,
            _ => unreachable!("split_pair on a non-fused module"),
        };
        let facs = factors_of(v);
        if facs.len() != self.arity() {
            return Err(ReprError::NotInModule(v.text()));
        }
        let n = left.arity();
        let right_facs = facs[n..].to_vec();
        let left_facs = facs[..n].to_vec();
        Ok((group(left_facs), group(right_facs)))
    }

    /// Cheap structural membership check: family, shape and parameter.
    pub fn check_member(&self, v: &BasisVector) -> Result<(), ReprError> {
        let ok = match (self, v) {
            (LoopModule::FundPlus { l, a }, BasisVector::HalfPlus(t, p)) => {
                t.shape() == *l && p == a
            }
            (LoopModule::FundMinus { s, a }, BasisVector::HalfMinus(t, p)) => {
                t.anchor() == *s && p == a
            }
            (LoopModule::Vector { a }, BasisVector::Row(t, p)) => t.len() == 1 && p == a,
            (LoopModule::Efl { l, a }, BasisVector::Row(t, p)) => {
                t.len() == *l as usize && p == a
            }
            (LoopModule::Rect { l, k, a }, BasisVector::Rect(t, p)) => {
                t.shape() == (*l as usize, *k as usize) && p == a
            }
            (LoopModule::Column { k, a }, _) => {
                let facs = factors_of(v);
                facs.len() == *k as usize
                    && facs.iter().enumerate().all(|(j, f)| match f {
                        BasisVector::Row(t, p) => t.len() == 1 && *p == a.shift(-2 * j as i64),
                        _ => false,
                    })
                    && {
                        let tup = column_tuple(v);
                        tup.windows(2).all(|w| w[0] < w[1])
                    }
            }
            (LoopModule::Fused { left, right }, _) => {
                let (lv, rv) = self.split_pair(v)?;
                left.check_member(&lv)?;
                right.check_member(&rv)?;
                true
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(ReprError::NotInModule(v.text()))
        }
    }

    /// The full action of the sign-i current on `v` as a finite list of
    /// delta terms, merged by (support, target) and sorted. The vector must
    /// belong to the module's declared basis.
    pub fn x_series(
        &self,
        sign: Sign,
        i: Node,
        v: &BasisVector,
    ) -> Result<Vec<DeltaTerm>, ReprError> {
        self.check_member(v)?;
        match self {
            LoopModule::Vector { .. } | LoopModule::Efl { .. } => {
                let (t, p) = match v {
                    BasisVector::Row(t, p) => (t, *p),
                    _ => return Err(ReprError::NotInModule(v.text())),
                };
                let l = t.len() as i64;
                let mut raw = Vec::new();
                if let Some((pos, target)) = row_x_term(t, sign, i) {
                    raw.push(DeltaTerm {
                        support: p.shift(i + l + 1 - 2 * pos),
                        coeff: Scalar::one(),
                        target: BasisVector::Row(target, p),
                    });
                }
                Ok(merge_delta_terms(raw))
            }
            LoopModule::FundPlus { .. } => {
                let (t, p) = match v {
                    BasisVector::HalfPlus(t, p) => (t, *p),
                    _ => return Err(ReprError::NotInModule(v.text())),
                };
                let l = t.shape();
                let needle = match sign {
                    Sign::Plus => i + 1,
                    Sign::Minus => i,
                };
                let mut raw = Vec::new();
                if let Some(pos) = half_plus_position(t, needle) {
                    let target = match sign {
                        Sign::Plus => t.etilde(i),
                        Sign::Minus => t.ftilde(i),
                    };
                    if let Some(u) = target {
                        raw.push(DeltaTerm {
                            support: p.shift(i + l + 1 - 2 * pos),
                            coeff: Scalar::one(),
                            target: BasisVector::HalfPlus(u, p),
                        });
                    }
                }
                Ok(merge_delta_terms(raw))
            }
            LoopModule::FundMinus { .. } => {
                let (t, p) = match v {
                    BasisVector::HalfMinus(t, p) => (t, *p),
                    _ => return Err(ReprError::NotInModule(v.text())),
                };
                let s = t.anchor();
                let needle = match sign {
                    Sign::Plus => i + 1,
                    Sign::Minus => i,
                };
                let mut raw = Vec::new();
                if let Some(pos) = half_minus_position(t, needle) {
                    let target = match sign {
                        Sign::Plus => t.etilde(i),
                        Sign::Minus => t.ftilde(i),
                    };
                    if let Some(u) = target {
                        raw.push(DeltaTerm {
                            support: p.shift(i + s + 1 - 2 * pos),
                            coeff: Scalar::one(),
                            target: BasisVector::HalfMinus(u, p),
                        });
                    }
                }
                Ok(merge_delta_terms(raw))
            }
            LoopModule::Column { k, a } => {
                let chain = column_chain(*k, *a);
                let out = chain.x_series(sign, i, v)?;
                for dt in &out {
                    let tup = column_tuple(&dt.target);
                    assert!(
                        tup.windows(2).all(|w| w[0] < w[1]),
                        "column action produced a non-strict target with nonzero coefficient: {}",
                        dt.target
                    );
                }
                Ok(out)
            }
            LoopModule::Rect { l, k, .. } => {
                let (t, p) = match v {
                    BasisVector::Rect(t, p) => (t, *p),
                    _ => return Err(ReprError::NotInModule(v.text())),
                };
                let chain = rect_chain(*l, *k, p);
                let flat = rect_flatten(t, p);
                let raw = chain.x_series(sign, i, &flat)?;
                let mut out = Vec::new();
                for dt in raw {
                    let reassembled = rect_reassemble(&dt.target, *l, *k).unwrap_or_else(|_| {
                        panic!(
                            "rectangle action produced a non-semi-standard target \
                             with nonzero coefficient: {}",
                            dt.target
                        )
                    });
                    out.push(DeltaTerm {
                        support: dt.support,
                        coeff: dt.coeff,
                        target: BasisVector::Rect(reassembled, p),
                    });
                }
                Ok(merge_delta_terms(out))
            }
            LoopModule::Fused { left, right } => {
                let (lv, rv) = self.split_pair(v)?;
                let mut raw = Vec::new();
                match sign {
                    Sign::Plus => {
                        for dt in left.x_series(sign, i, &lv)? {
                            raw.push(DeltaTerm {
                                support: dt.support,
                                coeff: dt.coeff,
                                target: tensor_concat(dt.target, rv.clone()),
                            });
                        }
                        let le = left.phi_eigen(i, &lv);
                        for dt in right.x_series(sign, i, &rv)? {
                            match eval_eigen_at(&le, &dt.support) {
                                None => {
                                    return Err(ReprError::FusionUndefined {
                                        node: i,
                                        vector: v.clone(),
                                        point: dt.support,
                                    })
                                }
                                Some(s) => {
                                    let c = dt.coeff.mul(&s);
                                    if !c.is_zero() {
                                        raw.push(DeltaTerm {
                                            support: dt.support,
                                            coeff: c,
                                            target: tensor_concat(lv.clone(), dt.target),
                                        });
                                    }
                                }
                            }
                        }
                    }
                    Sign::Minus => {
                        let re = right.phi_eigen(i, &rv);
                        for dt in left.x_series(sign, i, &lv)? {
                            match eval_eigen_at(&re, &dt.support) {
                                None => {
                                    return Err(ReprError::FusionUndefined {
                                        node: i,
                                        vector: v.clone(),
                                        point: dt.support,
                                    })
                                }
                                Some(s) => {
                                    let c = dt.coeff.mul(&s);
                                    if !c.is_zero() {
                                        raw.push(DeltaTerm {
                                            support: dt.support,
                                            coeff: c,
                                            target: tensor_concat(dt.target, rv.clone()),
                                        });
                                    }
                                }
                            }
                        }
                        for dt in right.x_series(sign, i, &rv)? {
                            raw.push(DeltaTerm {
                                support: dt.support,
                                coeff: dt.coeff,
                                target: tensor_concat(lv.clone(), dt.target),
                            });
                        }
                    }
                }
                Ok(merge_delta_terms(raw))
            }
        }
    }

    /// The diagonal eigenvalue of the commuting currents at node i on `v`,
    /// as a product of `psi(c q z)^{+-1}` factors with exponents netted.
    pub fn phi_eigen(&self, i: Node, v: &BasisVector) -> PhiEigen {
        match self {
            LoopModule::Vector { .. } | LoopModule::Efl { .. } => {
                let (t, p) = match v {
                    BasisVector::Row(t, p) => (t, *p),
                    _ => panic!("phi_eigen: expected a row vector, got {v}"),
                };
                let l = t.len() as i64;
                match row_phi_factor(t, i) {
                    Some((pos, s)) if s > 0 => PhiEigen::single(p.shift(i + l - 2 * pos), 1),
                    Some((pos, _)) => PhiEigen::single(p.shift(i + l + 2 - 2 * pos), -1),
                    None => PhiEigen::one(),
                }
            }
            LoopModule::FundPlus { .. } => {
                let (t, p) = match v {
                    BasisVector::HalfPlus(t, p) => (t, *p),
                    _ => panic!("phi_eigen: expected a half-plus vector, got {v}"),
                };
                let l = t.shape();
                match half_plus_phi_factor(t, i) {
                    Some((pos, s)) if s > 0 => PhiEigen::single(p.shift(i + l - 2 * pos), 1),
                    Some((pos, _)) => PhiEigen::single(p.shift(i + l + 2 - 2 * pos), -1),
                    None => PhiEigen::one(),
                }
            }
            LoopModule::FundMinus { .. } => {
                let (t, p) = match v {
                    BasisVector::HalfMinus(t, p) => (t, *p),
                    _ => panic!("phi_eigen: expected a half-minus vector, got {v}"),
                };
                let s0 = t.anchor();
                match half_minus_phi_factor(t, i) {
                    Some((pos, s)) if s > 0 => PhiEigen::single(p.shift(i + s0 - 2 * pos), 1),
                    Some((pos, _)) => PhiEigen::single(p.shift(i + s0 + 2 - 2 * pos), -1),
                    None => PhiEigen::one(),
                }
            }
            LoopModule::Column { .. } => {
                let mut out = PhiEigen::one();
                for f in factors_of(v) {
                    let (t, p) = match &f {
                        BasisVector::Row(t, p) => (t.clone(), *p),
                        other => panic!("phi_eigen: expected box factors, got {other}"),
                    };
                    match row_phi_factor(&t, i) {
                        Some((pos, s)) if s > 0 => out.push(p.shift(i + 1 - 2 * pos), 1),
                        Some((pos, _)) => out.push(p.shift(i + 3 - 2 * pos), -1),
                        None => {}
                    }
                }
                out
            }
            LoopModule::Rect { l, k, .. } => {
                let (t, p) = match v {
                    BasisVector::Rect(t, p) => (t, *p),
                    _ => panic!("phi_eigen: expected a rectangle vector, got {v}"),
                };
                let mut out = PhiEigen::one();
                for j in 1..=*k {
                    for r in 1..=*l {
                        let e = t.entry(r as usize, j as usize);
                        let cell = p.shift(-2 * (r - j));
                        let row = RowTableau::new(vec![e]).unwrap();
                        match row_phi_factor(&row, i) {
                            Some((pos, s)) if s > 0 => out.push(cell.shift(i + 1 - 2 * pos), 1),
                            Some((pos, _)) => out.push(cell.shift(i + 3 - 2 * pos), -1),
                            None => {}
                        }
                    }
                }
                out
            }
            LoopModule::Fused { left, right } => {
                let (lv, rv) = self
                    .split_pair(v)
                    .unwrap_or_else(|_| panic!("phi_eigen: {v} does not split"));
                left.phi_eigen(i, &lv).mul(&right.phi_eigen(i, &rv))
            }
        }
    }

    /// Enumerates the declared basis over a node window: tableau entries
    /// range over [lo, hi+1], the values moved by the windowed currents.
    pub fn basis_enum(&self, window: (Node, Node)) -> Vec<BasisVector> {
        let (lo, hi) = window;
        match self {
            LoopModule::FundPlus { l, a } => enumerate_half_plus(*l, lo, hi + 1)
                .into_iter()
                .map(|t| BasisVector::HalfPlus(t, *a))
                .collect(),
            LoopModule::FundMinus { s, a } => enumerate_half_minus(*s, lo, hi + 1)
                .into_iter()
                .map(|t| BasisVector::HalfMinus(t, *a))
                .collect(),
            LoopModule::Vector { a } => (lo..=hi + 1)
                .map(|j| BasisVector::Row(RowTableau::new(vec![j]).unwrap(), *a))
                .collect(),
            LoopModule::Efl { l, a } => enumerate_rows(*l as usize, lo, hi + 1)
                .into_iter()
                .map(|t| BasisVector::Row(t, *a))
                .collect(),
            LoopModule::Column { k, a } => enumerate_rows(*k as usize, lo, hi + 1)
                .into_iter()
                .map(|t| column_vector(t.entries(), *a))
                .collect(),
            LoopModule::Rect { l, k, a } => {
                enumerate_rects(*l as usize, *k as usize, lo, hi + 1)
                    .into_iter()
                    .map(|t| BasisVector::Rect(t, *a))
                    .collect()
            }
            LoopModule::Fused { left, right } => {
                let ls = left.basis_enum(window);
                let rs = right.basis_enum(window);
                let mut out = Vec::with_capacity(ls.len() * rs.len());
                for lv in &ls {
                    for rv in &rs {
                        out.push(tensor_concat(lv.clone(), rv.clone()));
                    }
                }
                out
            }
        }
    }

    pub fn weight(&self, v: &BasisVector) -> Weight {
        v.weight()
    }

    /// The mode-r component of the sign-i current: a finite linear
    /// combination with coefficients `coeff * support^r`.
    pub fn mode_apply(
        &self,
        sign: Sign,
        i: Node,
        r: i64,
        v: &BasisVector,
    ) -> Result<LinComb, ReprError> {
        let mut out = LinComb::zero();
        for dt in self.x_series(sign, i, v)? {
            let cr = dt
                .support
                .as_scalar()
                .pow_i64(r)
                .expect("support is an invertible monomial");
            out.add_term(dt.target, dt.coeff.mul(&cr));
        }
        Ok(out)
    }

    /// Linear extension of [`Self::mode_apply`].
    pub fn apply_lin(
        &self,
        sign: Sign,
        i: Node,
        r: i64,
        x: &LinComb,
    ) -> Result<LinComb, ReprError> {
        let mut out = LinComb::zero();
        for (v, c) in x.iter() {
            out = out.add(&self.mode_apply(sign, i, r, v)?.scale(c));
        }
        Ok(out)
    }

    /// The order-m coefficient of the node-i eigen series expanded at zero
    /// (`Plus`) or at infinity (`Minus`); the result is a scalar multiple
    /// of `v`.
    pub fn phi_mode_apply(&self, i: Node, sign: Sign, m: u32, v: &BasisVector) -> LinComb {
        let e = self.phi_eigen(i, v);
        let dir = match sign {
            Sign::Plus => ExpandAt::Zero,
            Sign::Minus => ExpandAt::Infinity,
        };
        let mm = m as usize;
        let mut coeffs: Vec<Scalar> = vec![Scalar::zero(); mm + 1];
        coeffs[0] = Scalar::one();
        for (c, &n) in e.factors() {
            let s: i8 = if n > 0 { 1 } else { -1 };
            let shifted = c.shift(1);
            let factor: Vec<Scalar> = (0..=m).map(|j| psi_mode(&shifted, s, dir, j)).collect();
            for _ in 0..n.abs() {
                coeffs = convolve_trunc(&coeffs, &factor, mm);
            }
        }
        let mut out = LinComb::zero();
        out.add_term(v.clone(), coeffs[mm].clone());
        out
    }

    /// k-fold zero-mode action divided by the q-factorial of k.
    pub fn divided_power_apply(
        &self,
        sign: Sign,
        i: Node,
        k: u32,
        v: &BasisVector,
    ) -> Result<LinComb, ReprError> {
        let mut cur = LinComb::singleton(v.clone());
        for _ in 0..k {
            cur = self.apply_lin(sign, i, 0, &cur)?;
        }
        let inv = qfactorial(k).inv().expect("q-factorial is nonzero");
        Ok(cur.scale(&inv))
    }

    /// Basis reachable from the seed (default: the generator) under the
    /// currents at nodes inside the window, at the level of delta terms.
    pub fn truncate(
        &self,
        window: (Node, Node),
        seed: Option<BasisVector>,
    ) -> Result<Truncation, ReprError> {
        let (lo, hi) = window;
        let seed = seed.unwrap_or_else(|| self.generator());
        let mut seen: BTreeSet<BasisVector> = BTreeSet::new();
        let mut queue: VecDeque<BasisVector> = VecDeque::new();
        seen.insert(seed.clone());
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            for sign in [Sign::Plus, Sign::Minus] {
                for i in lo..=hi {
                    for dt in self.x_series(sign, i, &v)? {
                        if seen.insert(dt.target.clone()) {
                            queue.push_back(dt.target);
                        }
                    }
                }
            }
        }
        Ok(Truncation {
            window,
            basis: seen.into_iter().collect(),
        })
    }

    /// Checks that the span of the basis vectors selected by `pred` is
    /// closed under every windowed current. The delta-term check certifies
    /// all modes at once; the given mode range is additionally swept and
    /// its nonzero escaping residuals counted.
    pub fn submodule_span<F>(
        &self,
        pred: F,
        window: (Node, Node),
        modes: (i64, i64),
    ) -> Result<SpanReport, ReprError>
    where
        F: Fn(&BasisVector) -> bool,
    {
        let (lo, hi) = window;
        let mut report = SpanReport {
            members: 0,
            actions: 0,
            mode_residuals: 0,
            violations: Vec::new(),
        };
        for v in self.basis_enum(window) {
            if !pred(&v) {
                continue;
            }
            report.members += 1;
            for sign in [Sign::Plus, Sign::Minus] {
                for i in lo..=hi {
                    let terms = self.x_series(sign, i, &v)?;
                    report.actions += 1;
                    let mut escaped: BTreeMap<BasisVector, Vec<(SpectralParam, Scalar)>> =
                        BTreeMap::new();
                    for dt in terms {
                        if !pred(&dt.target) {
                            escaped
                                .entry(dt.target.clone())
                                .or_default()
                                .push((dt.support, dt.coeff.clone()));
                            report.violations.push(SpanViolation {
                                source: v.clone(),
                                sign,
                                node: i,
                                support: dt.support,
                                target: dt.target,
                                coeff: dt.coeff,
                            });
                        }
                    }
                    for (_, parts) in escaped {
                        for r in modes.0..=modes.1 {
                            let mut sum = Scalar::zero();
                            for (c, kappa) in &parts {
                                let cr = c
                                    .as_scalar()
                                    .pow_i64(r)
                                    .expect("support is an invertible monomial");
                                sum = sum.add(&kappa.mul(&cr));
                            }
                            if !sum.is_zero() {
                                report.mode_residuals += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok(report)
    }
}

fn convolve_trunc(a: &[Scalar], b: &[Scalar], m: usize) -> Vec<Scalar> {
    let mut out = vec![Scalar::zero(); m + 1];
    for (ia, ca) in a.iter().enumerate().take(m + 1) {
        if ca.is_zero() {
            continue;
        }
        for (ib, cb) in b.iter().enumerate().take(m + 1 - ia) {
            if cb.is_zero() {
                continue;
            }
            out[ia + ib] = out[ia + ib].add(&ca.mul(cb));
        }
    }
    out
}

/// Result of [`LoopModule::truncate`]: the reachable basis, sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub window: (Node, Node),
    pub basis: Vec<BasisVector>,
}

impl Truncation {
    pub fn contains(&self, v: &BasisVector) -> bool {
        self.basis.binary_search(v).is_ok()
    }
}

/// One escaping delta term found by [`LoopModule::submodule_span`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpanViolation {
    pub source: BasisVector,
    pub sign: Sign,
    pub node: Node,
    pub support: SpectralParam,
    pub target: BasisVector,
    pub coeff: Scalar,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SpanReport {
    pub members: usize,
    pub actions: usize,
    pub mode_residuals: usize,
    pub violations: Vec<SpanViolation>,
}

impl SpanReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scans every evaluation point arising when two length-l row modules at
/// parameter ratio q^d are fused, in both orders, and reports whether the
/// fusion is defined everywhere. Entries range over a window wide enough
/// to realize every relative position of a delta support against an eigen
/// factor.
pub fn fusion_defined(l: i64, d: i64) -> bool {
    assert!(l >= 1);
    let rows = enumerate_rows(l as usize, -l, 3 * l);
    let mut dels: BTreeMap<Node, BTreeSet<i64>> = BTreeMap::new();
    let mut phis: BTreeMap<Node, BTreeSet<(i8, i64)>> = BTreeMap::new();
    for t in &rows {
        for i in (-l - 1)..=(3 * l + 1) {
            for sign in [Sign::Plus, Sign::Minus] {
                if let Some((pos, _)) = row_x_term(t, sign, i) {
                    dels.entry(i).or_default().insert(i + l + 1 - 2 * pos);
                }
            }
            if let Some((pos, s)) = row_phi_factor(t, i) {
                let g = if s > 0 {
                    i + l - 2 * pos
                } else {
                    i + l + 2 - 2 * pos
                };
                phis.entry(i).or_default().insert((s, g));
            }
        }
    }
    for (i, ds) in &dels {
        if let Some(ps) = phis.get(i) {
            for &x in ds {
                for &(s, g) in ps {
                    // Ratio at the evaluation point is q^{e} with
                    // e = +-d + g + 1 - x; a plus factor poles at e = 0,
                    // a minus factor at e = 2.
                    let target = if s > 0 { 0 } else { 2 };
                    if d + g + 1 - x == target || -d + g + 1 - x == target {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Closed form matching [`fusion_defined`]: the fusion of two length-l row
/// modules at ratio q^d fails exactly for even d with |d| <= 2l - 2.
pub fn fusion_defined_closed(l: i64, d: i64) -> bool {
    !(d % 2 == 0 && d.abs() <= 2 * l - 2)
}

/// The parameter-matching bijection between a chain of k vector factors at
/// a, a q^{-2}, ... and the length-k row module at a q^{-k+1}: a strict
/// tuple corresponds to the pure tensor of its entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnEflIso {
    k: i64,
    a: SpectralParam,
}

impl ColumnEflIso {
    pub fn new(k: i64, a: SpectralParam) -> Self {
        assert!(k >= 1);
        ColumnEflIso { k, a }
    }

    pub fn column_module(&self) -> LoopModule {
        LoopModule::column(self.k, self.a)
    }

    pub fn efl_param(&self) -> SpectralParam {
        self.a.shift(-(self.k - 1))
    }

    pub fn efl_module(&self) -> LoopModule {
        LoopModule::efl(self.k, self.efl_param())
    }

    /// Row vector of the row module to pure tensor of the chain.
    pub fn forward(&self, v: &BasisVector) -> Result<BasisVector, ReprError> {
        match v {
            BasisVector::Row(t, p) if *p == self.efl_param() && t.len() == self.k as usize => {
                Ok(column_vector(t.entries(), self.a))
            }
            _ => Err(ReprError::NotInModule(v.text())),
        }
    }

    /// Pure tensor of the chain back to a row vector.
    pub fn backward(&self, v: &BasisVector) -> Result<BasisVector, ReprError> {
        self.column_module().check_member(v)?;
        let tup = column_tuple(v);
        Ok(BasisVector::Row(RowTableau::new(tup)?, self.efl_param()))
    }

    pub fn forward_lin(&self, x: &LinComb) -> Result<LinComb, ReprError> {
        x.map_vectors(|v| self.forward(v))
    }

    pub fn backward_lin(&self, x: &LinComb) -> Result<LinComb, ReprError> {
        x.map_vectors(|v| self.backward(v))
    }
}
