//! Deterministic verification sweeps over truncated module bases.
//!
//! Every check here computes with exact scalars and returns either a list of
//! residual [`RelationReport`]s or a [`Certificate`]; there is no floating
//! point and no randomness, so re-running a check reproduces its output
//! byte for byte. Bounded mode sweeps are paired with delta-term
//! certificates: a current acts by finitely many terms `coeff * support^r`,
//! geometric in the mode index `r` with base equal to the support, so an
//! identity verified at the level of delta terms (or of the rational
//! functions they generate) holds in every mode at once, not only in the
//! swept range.

use std::collections::BTreeMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::crystal::{
    enumerate_half_minus, enumerate_half_plus, extremal_orbit, in_t_ell, pi_iso, CrystalElem,
    Node, TensorWord,
};
use crate::monomial::{
    lweight_monomial, string_decompose, Domain, PhiEigen, QCharacter, StringWitness, YMonomial,
};
use crate::repr::{
    fusion_defined, fusion_defined_closed, BasisVector, ColumnEflIso, LinComb, LoopModule,
    ReprError, Sign,
};
use crate::scalar::{Scalar, SpectralParam};

/// Outcome of one named check with its parameters, verdict and witnesses.
/// Certificates are plain data and serialize to JSON; two runs of the same
/// check produce identical certificates.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub name: String,
    pub params: Value,
    pub pass: bool,
    pub details: Value,
    pub witnesses: Vec<String>,
}

impl Certificate {
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "params": self.params,
            "pass": self.pass,
            "details": self.details,
            "witnesses": self.witnesses,
        })
    }
}

/// The defining-relation families swept by [`check_relations`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationId {
    /// Eigen modes commute and act diagonally.
    PhiPhi,
    /// Exchange of an eigen series with a current.
    PhiX,
    /// Commutator of a raising with a lowering current.
    Bracket,
    /// Quadratic exchange of two like-sign currents.
    Quadratic,
    /// Cubic relation between adjacent nodes, symmetrized in the two
    /// like-node variables.
    Serre,
    /// Currents at nodes two or more apart commute.
    Distant,
}

impl RelationId {
    pub fn label(self) -> &'static str {
        match self {
            RelationId::PhiPhi => "phi-phi",
            RelationId::PhiX => "phi-x",
            RelationId::Bracket => "bracket",
            RelationId::Quadratic => "quadratic",
            RelationId::Serre => "serre",
            RelationId::Distant => "distant",
        }
    }
}

/// One failed relation instance: the clause, the node pair, the mode tuple
/// (empty for a delta-level certificate), the basis vector it was applied
/// to, and the nonzero residual left after subtracting the two sides.
#[derive(Clone, Debug)]
pub struct RelationReport {
    pub relation: RelationId,
    pub i: Node,
    pub j: Node,
    pub modes: Vec<i64>,
    pub vector: BasisVector,
    pub residual: LinComb,
}

impl RelationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "relation": self.relation.label(),
            "i": self.i,
            "j": self.j,
            "modes": self.modes,
            "vector": self.vector.to_json(),
            "residual": self.residual.to_json(),
        })
    }
}

/// Aggregated outcome of a relation sweep. `failures` holds every instance
/// whose residual did not vanish; `undefined` records instances skipped
/// because a fusion evaluation hit a pole (reported, not thrown);
/// `frontier` records instances skipped because an action left the declared
/// basis, which does not happen for the built-in families.
#[derive(Clone, Debug, Default)]
pub struct RelationSweep {
    /// Mode-tuple residuals checked.
    pub instances: usize,
    /// Delta-level certificates checked; each one covers all modes of one
    /// relation instance.
    pub certificates: usize,
    pub failures: Vec<RelationReport>,
    pub undefined: Vec<String>,
    pub frontier: Vec<String>,
}

impl RelationSweep {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn absorb(&mut self, other: RelationSweep) {
        self.instances += other.instances;
        self.certificates += other.certificates;
        self.failures.extend(other.failures);
        self.undefined.extend(other.undefined);
        self.frontier.extend(other.frontier);
    }

    pub fn certificate(&self, name: &str, params: Value) -> Certificate {
        Certificate {
            name: name.to_string(),
            params,
            pass: self.ok(),
            details: json!({
                "instances": self.instances,
                "certificates": self.certificates,
                "failures": self.failures.len(),
                "undefined": self.undefined,
                "frontier": self.frontier,
            }),
            witnesses: self
                .failures
                .iter()
                .map(|f| {
                    format!(
                        "{} i={} j={} modes={:?} on {}",
                        f.relation.label(),
                        f.i,
                        f.j,
                        f.modes,
                        f.vector.text()
                    )
                })
                .collect(),
        }
    }
}

fn cartan(i: Node, j: Node) -> i64 {
    if i == j {
        2
    } else if (i - j).abs() == 1 {
        -1
    } else {
        0
    }
}

fn q_minus_qinv() -> Scalar {
    Scalar::q_pow(1).sub(&Scalar::q_pow(-1))
}

// ---------------------------------------------------------------------------
// Polynomials in the certificate variable.
// ---------------------------------------------------------------------------

/// A polynomial in one formal variable with exact scalar coefficients,
/// ascending degree. Used to compare both sides of a relation as rational
/// functions of a series variable, which certifies every mode at once.
#[derive(Clone, Debug)]
struct ZPoly(Vec<Scalar>);

impl ZPoly {
    fn constant(c: Scalar) -> Self {
        ZPoly(vec![c])
    }

    /// a0 + a1 * Z.
    fn linear(a0: Scalar, a1: Scalar) -> Self {
        ZPoly(vec![a0, a1])
    }

    fn trim(&mut self) {
        while self.0.len() > 1 && self.0.last().is_some_and(Scalar::is_zero) {
            self.0.pop();
        }
    }

    fn degree(&self) -> usize {
        let mut d = self.0.len();
        while d > 1 && self.0[d - 1].is_zero() {
            d -= 1;
        }
        d - 1
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(Scalar::is_zero)
    }

    fn mul(&self, other: &ZPoly) -> ZPoly {
        let mut out = vec![Scalar::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        let mut p = ZPoly(out);
        p.trim();
        p
    }

    fn sub(&self, other: &ZPoly) -> ZPoly {
        let n = self.0.len().max(other.0.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let a = self.0.get(k).cloned().unwrap_or_else(Scalar::zero);
            let b = other.0.get(k).cloned().unwrap_or_else(Scalar::zero);
            out.push(a.sub(&b));
        }
        let mut p = ZPoly(out);
        p.trim();
        p
    }

    /// Exact divisibility over the scalar fraction field.
    fn divides(&self, num: &ZPoly) -> bool {
        let mut rem = num.clone();
        rem.trim();
        let d = self.degree();
        let lead = self.0[d].clone();
        let lead_inv = match lead.inv() {
            Ok(x) => x,
            Err(_) => return num.is_zero(),
        };
        while !rem.is_zero() && rem.degree() >= d {
            let rd = rem.degree();
            let factor = rem.0[rd].mul(&lead_inv);
            let mut sub = vec![Scalar::zero(); rd + 1];
            for (k, c) in self.0.iter().enumerate().take(d + 1) {
                sub[rd - d + k] = factor.mul(c);
            }
            rem = rem.sub(&ZPoly(sub));
        }
        rem.is_zero()
    }
}

/// The eigen series of `e` as a rational function `num / den` of the series
/// variable: each net factor `(c, n)` contributes
/// `[q (1 - c q^{-1} Z)]^n / (1 - c q Z)^n`, with negative `n` flipping
/// numerator and denominator.
fn psi_rational(e: &PhiEigen) -> (ZPoly, ZPoly) {
    let mut num = ZPoly::constant(Scalar::one());
    let mut den = ZPoly::constant(Scalar::one());
    let mut unit = 0i64;
    for (c, &n) in e.factors() {
        unit += n;
        let low = ZPoly::linear(Scalar::one(), c.shift(-1).as_scalar().neg());
        let high = ZPoly::linear(Scalar::one(), c.shift(1).as_scalar().neg());
        for _ in 0..n.abs() {
            if n > 0 {
                num = num.mul(&low);
                den = den.mul(&high);
            } else {
                num = num.mul(&high);
                den = den.mul(&low);
            }
        }
    }
    num = num.mul(&ZPoly::constant(Scalar::q_pow(unit)));
    (num, den)
}

// ---------------------------------------------------------------------------
// Composition families.
// ---------------------------------------------------------------------------

/// One term of an iterated current application: the delta bases in
/// application order (innermost first), the accumulated coefficient, and
/// the final target. The mode `(r_1, ..., r_k)` component of the chain is
/// `coeff * bases[0]^{r_1} * ... * bases[k-1]^{r_k}` on `target`.
#[derive(Clone, Debug)]
struct ChainTerm {
    bases: Vec<SpectralParam>,
    coeff: Scalar,
    target: BasisVector,
}

fn fam_chain(
    m: &LoopModule,
    ops: &[(Sign, Node)],
    v: &BasisVector,
) -> Result<Vec<ChainTerm>, ReprError> {
    let mut cur = vec![ChainTerm {
        bases: Vec::new(),
        coeff: Scalar::one(),
        target: v.clone(),
    }];
    for &(sign, node) in ops {
        let mut next = Vec::new();
        for t in &cur {
            for dt in m.x_series(sign, node, &t.target)? {
                let mut bases = t.bases.clone();
                bases.push(dt.support);
                next.push(ChainTerm {
                    bases,
                    coeff: t.coeff.mul(&dt.coeff),
                    target: dt.target,
                });
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Coefficient of the z^mu mode of the node-i eigen series on `v`: the
/// plus series has modes mu >= 0, the minus series modes mu <= 0.
fn phi_coeff(m: &LoopModule, i: Node, dir: Sign, mu: i64, v: &BasisVector) -> Scalar {
    let order = match dir {
        Sign::Plus if mu >= 0 => mu as u32,
        Sign::Minus if mu <= 0 => (-mu) as u32,
        _ => return Scalar::zero(),
    };
    m.phi_mode_apply(i, dir, order, v).coeff(v)
}

fn pow_param(p: &SpectralParam, r: i64) -> Scalar {
    p.as_scalar()
        .pow_i64(r)
        .expect("spectral parameters are invertible")
}

type KeyMap = BTreeMap<(BasisVector, Vec<SpectralParam>), Scalar>;

fn key_insert(map: &mut KeyMap, target: BasisVector, bases: Vec<SpectralParam>, c: Scalar) {
    let entry = map
        .entry((target, bases))
        .or_insert_with(Scalar::zero);
    *entry = entry.add(&c);
}

// ---------------------------------------------------------------------------
// Per-relation sweeps on a single basis vector.
// ---------------------------------------------------------------------------

struct VectorSweep<'a> {
    m: &'a LoopModule,
    v: &'a BasisVector,
    window: (Node, Node),
    rbound: i64,
    out: RelationSweep,
}

impl<'a> VectorSweep<'a> {
    fn fail(&mut self, relation: RelationId, i: Node, j: Node, modes: Vec<i64>, residual: LinComb) {
        self.out.failures.push(RelationReport {
            relation,
            i,
            j,
            modes,
            vector: self.v.clone(),
            residual,
        });
    }

    fn skip_undefined(&mut self, relation: RelationId, i: Node, j: Node, e: &ReprError) {
        self.out.undefined.push(format!(
            "{} i={} j={} on {}: {}",
            relation.label(),
            i,
            j,
            self.v.text(),
            e
        ));
    }

    /// Eigen modes are diagonal on the basis, hence commute; the residual
    /// of an instance is the off-diagonal part of the mode application.
    fn phi_phi(&mut self, i: Node) {
        for dir in [Sign::Plus, Sign::Minus] {
            for mu in 0..=self.rbound.max(0) as u32 {
                let lin = self.m.phi_mode_apply(i, dir, mu, self.v);
                let mut off = LinComb::zero();
                for (t, c) in lin.iter() {
                    if t != self.v {
                        off.add_term(t.clone(), c.clone());
                    }
                }
                self.out.instances += 1;
                if !off.is_zero() {
                    self.fail(RelationId::PhiPhi, i, i, vec![mu as i64], off);
                }
            }
        }
    }

    /// (w - q^{eC} z) phi_i(z) x_j(w) = (q^{eC} w - z) x_j(w) phi_i(z),
    /// with e = +1 for the raising and -1 for the lowering current, checked
    /// mode by mode and, per delta term, as an exact rational identity in
    /// the eigen variable (all modes at once).
    fn phi_x(&mut self, i: Node, j: Node) {
        for xsign in [Sign::Plus, Sign::Minus] {
            let eps = if xsign == Sign::Plus { 1 } else { -1 };
            let qc = Scalar::q_pow(eps * cartan(i, j));
            let fam = match fam_chain(self.m, &[(xsign, j)], self.v) {
                Ok(f) => f,
                Err(e) => {
                    self.skip_undefined(RelationId::PhiX, i, j, &e);
                    continue;
                }
            };
            // All-modes certificate, one per delta term: cross-multiplied
            // rational identity (s^{-1} - q^{eC} Z) psi_u = (q^{eC} s^{-1} - Z) psi_v.
            let (nv, dv) = psi_rational(&self.m.phi_eigen(i, self.v));
            for t in &fam {
                let s_inv = pow_param(&t.bases[0], -1);
                let (nu, du) = psi_rational(&self.m.phi_eigen(i, &t.target));
                let lhs = ZPoly::linear(s_inv.clone(), qc.neg())
                    .mul(&nu)
                    .mul(&dv);
                let rhs = ZPoly::linear(qc.mul(&s_inv), Scalar::one().neg())
                    .mul(&nv)
                    .mul(&du);
                self.out.certificates += 1;
                if !lhs.sub(&rhs).is_zero() {
                    let mut res = LinComb::zero();
                    res.add_term(t.target.clone(), t.coeff.clone());
                    self.fail(RelationId::PhiX, i, j, vec![eps], res);
                }
            }
            // Bounded mode sweep in (mu, r).
            let r0 = self.rbound;
            for dir in [Sign::Plus, Sign::Minus] {
                let mus: Vec<i64> = match dir {
                    Sign::Plus => (0..=r0 + 1).collect(),
                    Sign::Minus => (-(r0 + 1)..=1).collect(),
                };
                for &mu in &mus {
                    for r in -r0..=r0 {
                        let mut lhs = LinComb::zero();
                        let mut rhs = LinComb::zero();
                        for t in &fam {
                            // [phi x]_{mu, r-1} - q^{eC} [phi x]_{mu-1, r}
                            let a = pow_param(&t.bases[0], r - 1)
                                .mul(&phi_coeff(self.m, i, dir, mu, &t.target));
                            let b = pow_param(&t.bases[0], r)
                                .mul(&phi_coeff(self.m, i, dir, mu - 1, &t.target))
                                .mul(&qc);
                            lhs.add_term(t.target.clone(), t.coeff.mul(&a.sub(&b)));
                            // q^{eC} [x phi]_{mu, r-1} - [x phi]_{mu-1, r}
                            let c = pow_param(&t.bases[0], r - 1)
                                .mul(&phi_coeff(self.m, i, dir, mu, self.v))
                                .mul(&qc);
                            let d = pow_param(&t.bases[0], r)
                                .mul(&phi_coeff(self.m, i, dir, mu - 1, self.v));
                            rhs.add_term(t.target.clone(), t.coeff.mul(&c.sub(&d)));
                        }
                        self.out.instances += 1;
                        let res = lhs.sub(&rhs);
                        if !res.is_zero() {
                            self.fail(RelationId::PhiX, i, j, vec![eps, mu, r], res);
                        }
                    }
                }
            }
        }
    }

    /// [x^+_i(z), x^-_j(w)] = delta_{ij} (delta(w/z) phi^+_i(w)
    /// - delta(z/w) phi^-_i(z)) / (q - q^{-1}).
    fn bracket(&mut self, i: Node, j: Node) {
        // z binds the raising current, w the lowering one. In `pm` the
        // lowering current acts first, in `mp` the raising one does.
        let pm = match fam_chain(self.m, &[(Sign::Minus, j), (Sign::Plus, i)], self.v) {
            Ok(f) => f,
            Err(e) => {
                self.skip_undefined(RelationId::Bracket, i, j, &e);
                return;
            }
        };
        let mp = match fam_chain(self.m, &[(Sign::Plus, i), (Sign::Minus, j)], self.v) {
            Ok(f) => f,
            Err(e) => {
                self.skip_undefined(RelationId::Bracket, i, j, &e);
                return;
            }
        };
        // All-modes certificate. Keys are (target, z-base, w-base); the
        // diagonal returns to the start with equal bases and is matched
        // against the pole structure of the eigen series, every other key
        // must cancel between the two orders.
        let mut off: KeyMap = BTreeMap::new();
        let mut diag: BTreeMap<SpectralParam, Scalar> = BTreeMap::new();
        for t in &pm {
            let (wb, zb) = (t.bases[0], t.bases[1]);
            if t.target == *self.v && wb == zb {
                let e = diag.entry(zb).or_insert_with(Scalar::zero);
                *e = e.add(&t.coeff);
            } else {
                key_insert(&mut off, t.target.clone(), vec![zb, wb], t.coeff.clone());
            }
        }
        for t in &mp {
            let (zb, wb) = (t.bases[0], t.bases[1]);
            if t.target == *self.v && wb == zb {
                let e = diag.entry(zb).or_insert_with(Scalar::zero);
                *e = e.sub(&t.coeff);
            } else {
                key_insert(
                    &mut off,
                    t.target.clone(),
                    vec![zb, wb],
                    t.coeff.neg(),
                );
            }
        }
        self.out.certificates += 1;
        let mut bad = LinComb::zero();
        for ((target, _), c) in off.iter() {
            if !c.is_zero() {
                bad.add_term(target.clone(), c.clone());
            }
        }
        if !bad.is_zero() {
            self.fail(RelationId::Bracket, i, j, vec![], bad);
        }
        // Diagonal: sum_k C_k delta(sigma_k z) must equal the difference of
        // the two expansions of R = delta_{ij} psi_v / (q - q^{-1}), which
        // holds iff R - sum_k C_k / (1 - sigma_k Z) has no pole away from
        // zero and infinity: exact polynomial divisibility below.
        self.out.certificates += 1;
        let (mut nv, dv) = if i == j {
            psi_rational(&self.m.phi_eigen(i, self.v))
        } else {
            (ZPoly::constant(Scalar::zero()), ZPoly::constant(Scalar::one()))
        };
        let qq_inv = q_minus_qinv().inv().expect("q - q^{-1} is nonzero");
        nv = nv.mul(&ZPoly::constant(qq_inv.clone()));
        let sigmas: Vec<(SpectralParam, Scalar)> = diag
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .collect();
        let mut prod = ZPoly::constant(Scalar::one());
        for (s, _) in &sigmas {
            prod = prod.mul(&ZPoly::linear(Scalar::one(), s.as_scalar().neg()));
        }
        // numerator of R - sum C_k/(1 - sigma_k Z) over denominator dv * prod
        let mut num = nv.mul(&prod);
        for (k, (_, ck)) in sigmas.iter().enumerate() {
            let mut partial = ZPoly::constant(ck.clone()).mul(&dv);
            for (k2, (s2, _)) in sigmas.iter().enumerate() {
                if k2 != k {
                    partial = partial.mul(&ZPoly::linear(Scalar::one(), s2.as_scalar().neg()));
                }
            }
            num = num.sub(&partial);
        }
        if !dv.mul(&prod).divides(&num) {
            let mut res = LinComb::zero();
            res.add_term(self.v.clone(), Scalar::one());
            self.fail(RelationId::Bracket, i, j, vec![], res);
        }
        // Bounded mode sweep in (r, s).
        for r in -self.rbound..=self.rbound {
            for s in -self.rbound..=self.rbound {
                let mut lhs = LinComb::zero();
                for t in &pm {
                    let c = t
                        .coeff
                        .mul(&pow_param(&t.bases[0], s))
                        .mul(&pow_param(&t.bases[1], r));
                    lhs.add_term(t.target.clone(), c);
                }
                for t in &mp {
                    let c = t
                        .coeff
                        .mul(&pow_param(&t.bases[0], r))
                        .mul(&pow_param(&t.bases[1], s));
                    lhs.add_term(t.target.clone(), c.neg());
                }
                let mut rhs = LinComb::zero();
                if i == j {
                    let n = r + s;
                    let mut c = Scalar::zero();
                    if n >= 0 {
                        c = c.add(&phi_coeff(self.m, i, Sign::Plus, n, self.v));
                    }
                    if n <= 0 {
                        c = c.sub(&phi_coeff(self.m, i, Sign::Minus, n, self.v));
                    }
                    rhs.add_term(self.v.clone(), c.mul(&qq_inv));
                }
                self.out.instances += 1;
                let res = lhs.sub(&rhs);
                if !res.is_zero() {
                    self.fail(RelationId::Bracket, i, j, vec![r, s], res);
                }
            }
        }
    }

    /// (z - q^{-eC} w) x_i(z) x_j(w) = (q^{-eC} z - w) x_j(w) x_i(z) for
    /// like-sign currents, e the sign of the current pair. With all
    /// currents graded by plain powers z^r the exchange constant is
    /// q^{-C_ij} on the raising side and q^{C_ij} on the lowering side.
    fn quadratic(&mut self, i: Node, j: Node) {
        for xsign in [Sign::Plus, Sign::Minus] {
            let eps = if xsign == Sign::Plus { 1 } else { -1 };
            let qc = Scalar::q_pow(-eps * cartan(i, j));
            // lf: x_j first (w inner), then x_i (z outer).
            let lf = match fam_chain(self.m, &[(xsign, j), (xsign, i)], self.v) {
                Ok(f) => f,
                Err(e) => {
                    self.skip_undefined(RelationId::Quadratic, i, j, &e);
                    continue;
                }
            };
            // rf: x_i first (z inner), then x_j (w outer).
            let rf = match fam_chain(self.m, &[(xsign, i), (xsign, j)], self.v) {
                Ok(f) => f,
                Err(e) => {
                    self.skip_undefined(RelationId::Quadratic, i, j, &e);
                    continue;
                }
            };
            // All-modes certificate per (target, z-base, w-base) key:
            // z delta(bz z) = bz^{-1} delta(bz z) turns the prefactors into
            // scalars on each key.
            let mut keys: KeyMap = BTreeMap::new();
            for t in &lf {
                let (wb, zb) = (t.bases[0], t.bases[1]);
                let c = t
                    .coeff
                    .mul(&pow_param(&zb, -1).sub(&qc.mul(&pow_param(&wb, -1))));
                key_insert(&mut keys, t.target.clone(), vec![zb, wb], c);
            }
            for t in &rf {
                let (zb, wb) = (t.bases[0], t.bases[1]);
                let c = t
                    .coeff
                    .mul(&qc.mul(&pow_param(&zb, -1)).sub(&pow_param(&wb, -1)));
                key_insert(&mut keys, t.target.clone(), vec![zb, wb], c.neg());
            }
            self.out.certificates += 1;
            let mut bad = LinComb::zero();
            for ((target, _), c) in keys.iter() {
                if !c.is_zero() {
                    bad.add_term(target.clone(), c.clone());
                }
            }
            if !bad.is_zero() {
                self.fail(RelationId::Quadratic, i, j, vec![eps], bad);
            }
            // Bounded mode sweep.
            for r in -self.rbound..=self.rbound {
                for s in -self.rbound..=self.rbound {
                    let mut res = LinComb::zero();
                    for t in &lf {
                        let (wb, zb) = (t.bases[0], t.bases[1]);
                        let c = pow_param(&zb, r - 1)
                            .mul(&pow_param(&wb, s))
                            .sub(&qc.mul(&pow_param(&zb, r)).mul(&pow_param(&wb, s - 1)));
                        res.add_term(t.target.clone(), t.coeff.mul(&c));
                    }
                    for t in &rf {
                        let (zb, wb) = (t.bases[0], t.bases[1]);
                        let c = qc
                            .mul(&pow_param(&zb, r - 1))
                            .mul(&pow_param(&wb, s))
                            .sub(&pow_param(&zb, r).mul(&pow_param(&wb, s - 1)));
                        res.add_term(t.target.clone(), t.coeff.mul(&c).neg());
                    }
                    self.out.instances += 1;
                    if !res.is_zero() {
                        self.fail(RelationId::Quadratic, i, j, vec![eps, r, s], res);
                    }
                }
            }
        }
    }

    /// x_i(z1) x_i(z2) x_j(w) - (q + q^{-1}) x_i(z1) x_j(w) x_i(z2)
    /// + x_j(w) x_i(z1) x_i(z2), plus the same with z1 and z2 swapped,
    /// vanishes for adjacent i, j.
    fn serre(&mut self, i: Node, j: Node) {
        let qq = Scalar::q_pow(1).add(&Scalar::q_pow(-1));
        for xsign in [Sign::Plus, Sign::Minus] {
            let eps = if xsign == Sign::Plus { 1 } else { -1 };
            // Application order is right to left; bases come innermost
            // first, so reorder each composition to (z1, z2, w).
            let f1 = fam_chain(self.m, &[(xsign, j), (xsign, i), (xsign, i)], self.v);
            let f2 = fam_chain(self.m, &[(xsign, i), (xsign, j), (xsign, i)], self.v);
            let f3 = fam_chain(self.m, &[(xsign, i), (xsign, i), (xsign, j)], self.v);
            let (f1, f2, f3) = match (f1, f2, f3) {
                (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                    self.skip_undefined(RelationId::Serre, i, j, &e);
                    continue;
                }
            };
            // keys (target, [z1, z2, w]) accumulating all six summands.
            let mut keys: KeyMap = BTreeMap::new();
            let push = |keys: &mut KeyMap, target: &BasisVector, b: [SpectralParam; 3], c: Scalar| {
                // z1 <-> z2 symmetrization.
                key_insert(keys, target.clone(), vec![b[0], b[1], b[2]], c.clone());
                key_insert(keys, target.clone(), vec![b[1], b[0], b[2]], c);
            };
            for t in &f1 {
                // inner w, middle z2, outer z1
                push(
                    &mut keys,
                    &t.target,
                    [t.bases[2], t.bases[1], t.bases[0]],
                    t.coeff.clone(),
                );
            }
            for t in &f2 {
                // inner z2, middle w, outer z1
                push(
                    &mut keys,
                    &t.target,
                    [t.bases[2], t.bases[0], t.bases[1]],
                    t.coeff.mul(&qq).neg(),
                );
            }
            for t in &f3 {
                // inner z2, middle z1, outer w
                push(
                    &mut keys,
                    &t.target,
                    [t.bases[1], t.bases[0], t.bases[2]],
                    t.coeff.clone(),
                );
            }
            self.out.certificates += 1;
            let mut bad = LinComb::zero();
            for ((target, _), c) in keys.iter() {
                if !c.is_zero() {
                    bad.add_term(target.clone(), c.clone());
                }
            }
            if !bad.is_zero() {
                self.fail(RelationId::Serre, i, j, vec![eps], bad);
            }
            // Bounded mode sweep over (r1, r2, s) from the key map.
            for r1 in -self.rbound..=self.rbound {
                for r2 in -self.rbound..=self.rbound {
                    for s in -self.rbound..=self.rbound {
                        let mut res = LinComb::zero();
                        for ((target, bases), c) in keys.iter() {
                            if c.is_zero() {
                                continue;
                            }
                            let val = c
                                .mul(&pow_param(&bases[0], r1))
                                .mul(&pow_param(&bases[1], r2))
                                .mul(&pow_param(&bases[2], s));
                            res.add_term(target.clone(), val);
                        }
                        self.out.instances += 1;
                        if !res.is_zero() {
                            self.fail(RelationId::Serre, i, j, vec![eps, r1, r2, s], res);
                        }
                    }
                }
            }
        }
    }

    /// Like-sign currents at distance two or more commute outright.
    fn distant(&mut self, i: Node, j: Node) {
        for xsign in [Sign::Plus, Sign::Minus] {
            let eps = if xsign == Sign::Plus { 1 } else { -1 };
            let lf = match fam_chain(self.m, &[(xsign, j), (xsign, i)], self.v) {
                Ok(f) => f,
                Err(e) => {
                    self.skip_undefined(RelationId::Distant, i, j, &e);
                    continue;
                }
            };
            let rf = match fam_chain(self.m, &[(xsign, i), (xsign, j)], self.v) {
                Ok(f) => f,
                Err(e) => {
                    self.skip_undefined(RelationId::Distant, i, j, &e);
                    continue;
                }
            };
            let mut keys: KeyMap = BTreeMap::new();
            for t in &lf {
                key_insert(
                    &mut keys,
                    t.target.clone(),
                    vec![t.bases[1], t.bases[0]],
                    t.coeff.clone(),
                );
            }
            for t in &rf {
                key_insert(
                    &mut keys,
                    t.target.clone(),
                    vec![t.bases[0], t.bases[1]],
                    t.coeff.neg(),
                );
            }
            self.out.certificates += 1;
            let mut bad = LinComb::zero();
            for ((target, _), c) in keys.iter() {
                if !c.is_zero() {
                    bad.add_term(target.clone(), c.clone());
                }
            }
            if !bad.is_zero() {
                self.fail(RelationId::Distant, i, j, vec![eps], bad);
            }
            for r in -self.rbound..=self.rbound {
                for s in -self.rbound..=self.rbound {
                    let mut res = LinComb::zero();
                    for ((target, bases), c) in keys.iter() {
                        if c.is_zero() {
                            continue;
                        }
                        let val = c.mul(&pow_param(&bases[0], r)).mul(&pow_param(&bases[1], s));
                        res.add_term(target.clone(), val);
                    }
                    self.out.instances += 1;
                    if !res.is_zero() {
                        self.fail(RelationId::Distant, i, j, vec![eps, r, s], res);
                    }
                }
            }
        }
    }

    fn run(mut self) -> RelationSweep {
        let (lo, hi) = self.window;
        for i in lo..=hi {
            self.phi_phi(i);
            for j in lo..=hi {
                self.phi_x(i, j);
                self.bracket(i, j);
                self.quadratic(i, j);
                match (i - j).abs() {
                    1 => self.serre(i, j),
                    d if d >= 2 => self.distant(i, j),
                    _ => {}
                }
            }
        }
        self.out
    }
}

/// Sweeps every defining-relation clause over the truncated basis: each
/// clause is checked mode by mode for all mode tuples bounded by `rbound`,
/// and certified for all modes at once at the level of delta terms.
/// Reports failures; an empty failure list means every residual vanished.
/// Work is split per basis vector and merged in basis order, so the result
/// is deterministic.
pub fn check_relations(m: &LoopModule, window: (Node, Node), rbound: i64) -> RelationSweep {
    let basis = match m.truncate(window, None) {
        Ok(t) => t.basis,
        Err(e) => {
            return RelationSweep {
                undefined: vec![format!("truncation failed: {e}")],
                ..RelationSweep::default()
            };
        }
    };
    let parts: Vec<RelationSweep> = basis
        .par_iter()
        .map(|v| {
            VectorSweep {
                m,
                v,
                window,
                rbound,
                out: RelationSweep::default(),
            }
            .run()
        })
        .collect();
    let mut out = RelationSweep::default();
    for p in parts {
        out.absorb(p);
    }
    out
}

// ---------------------------------------------------------------------------
// q-characters.
// ---------------------------------------------------------------------------

/// The ell-weight monomial of `v`: the product over nodes near the window
/// of the eigen content read off the phi series.
pub fn lweight_of_vector(m: &LoopModule, v: &BasisVector, window: (Node, Node)) -> YMonomial {
    let (lo, hi) = window;
    let mut mono = YMonomial::one(Domain::Aff);
    for i in (lo - 1)..=(hi + 1) {
        mono = mono.mul(&lweight_monomial(&m.phi_eigen(i, v), i));
    }
    mono
}

/// The q-character of the truncated module: one ell-weight monomial per
/// basis vector, read off the diagonal eigen series.
pub fn module_qchar(m: &LoopModule, window: (Node, Node)) -> Result<QCharacter, ReprError> {
    let tr = m.truncate(window, None)?;
    let mut chi = QCharacter::new(Domain::Aff);
    for v in &tr.basis {
        chi.add_term(lweight_of_vector(m, v, window), 1);
    }
    Ok(chi)
}

/// Compares the truncated q-character with a reference, as exact multisets.
pub fn check_qchar(m: &LoopModule, window: (Node, Node), reference: &QCharacter) -> Certificate {
    let params = json!({ "window": [window.0, window.1] });
    let chi = match module_qchar(m, window) {
        Ok(c) => c,
        Err(e) => {
            return Certificate {
                name: "qchar".into(),
                params,
                pass: false,
                details: json!({ "error": e.to_string() }),
                witnesses: vec![e.to_string()],
            };
        }
    };
    let mut witnesses = Vec::new();
    for (mono, &mult) in chi.terms() {
        if reference.multiplicity(mono) != mult {
            witnesses.push(format!("computed {} x{}", mono.text(), mult));
        }
    }
    for (mono, &mult) in reference.terms() {
        if chi.multiplicity(mono) != mult {
            witnesses.push(format!("reference {} x{}", mono.text(), mult));
        }
    }
    Certificate {
        name: "qchar".into(),
        params,
        pass: witnesses.is_empty(),
        details: json!({
            "terms": chi.num_terms(),
            "mass": chi.total_multiplicity(),
        }),
        witnesses,
    }
}

/// Checks that the map from basis vectors to ell-weight monomials is
/// injective on the truncated basis: the eigen series act diagonally by
/// construction, so a simple joint spectrum makes the module thin.
pub fn check_thin(m: &LoopModule, window: (Node, Node)) -> Certificate {
    let params = json!({ "window": [window.0, window.1] });
    let tr = match m.truncate(window, None) {
        Ok(t) => t,
        Err(e) => {
            return Certificate {
                name: "thin".into(),
                params,
                pass: false,
                details: json!({ "error": e.to_string() }),
                witnesses: vec![e.to_string()],
            };
        }
    };
    let mut seen: BTreeMap<YMonomial, Vec<String>> = BTreeMap::new();
    for v in &tr.basis {
        seen.entry(lweight_of_vector(m, v, window))
            .or_default()
            .push(v.text());
    }
    let witnesses: Vec<String> = seen
        .iter()
        .filter(|(_, vs)| vs.len() > 1)
        .map(|(mono, vs)| format!("{} shared by {}", mono.text(), vs.join(", ")))
        .collect();
    Certificate {
        name: "thin".into(),
        params,
        pass: witnesses.is_empty(),
        details: json!({ "basis": tr.basis.len() }),
        witnesses,
    }
}

/// Checks local nilpotency of every windowed zero-mode on the truncated
/// basis and reports the largest number of steps needed to reach zero.
pub fn check_integrable(m: &LoopModule, window: (Node, Node)) -> Certificate {
    let params = json!({ "window": [window.0, window.1] });
    let cap = 64u32;
    let tr = match m.truncate(window, None) {
        Ok(t) => t,
        Err(e) => {
            return Certificate {
                name: "integrable".into(),
                params,
                pass: false,
                details: json!({ "error": e.to_string() }),
                witnesses: vec![e.to_string()],
            };
        }
    };
    let (lo, hi) = window;
    let mut witnesses = Vec::new();
    let mut bound = 0u32;
    let mut undefined = Vec::new();
    for v in &tr.basis {
        for sign in [Sign::Plus, Sign::Minus] {
            for i in lo..=hi {
                let mut cur = LinComb::singleton(v.clone());
                let mut steps = 0u32;
                loop {
                    if cur.is_zero() {
                        break;
                    }
                    if steps == cap {
                        witnesses.push(format!(
                            "{} node {} on {} still nonzero after {} steps",
                            sign.label(),
                            i,
                            v.text(),
                            cap
                        ));
                        break;
                    }
                    match m.apply_lin(sign, i, 0, &cur) {
                        Ok(next) => cur = next,
                        Err(e) => {
                            undefined.push(e.to_string());
                            break;
                        }
                    }
                    steps += 1;
                }
                bound = bound.max(steps);
            }
        }
    }
    Certificate {
        name: "integrable".into(),
        params,
        pass: witnesses.is_empty(),
        details: json!({
            "basis": tr.basis.len(),
            "nilpotency-bound": bound,
            "undefined": undefined,
        }),
        witnesses,
    }
}

/// The crystal shadow of a basis vector: drop spectral parameters, keep
/// the tableau combinatorics.
pub fn to_crystal(v: &BasisVector) -> CrystalElem {
    match v {
        BasisVector::Row(t, _) => CrystalElem::Row(t.clone()),
        BasisVector::Rect(t, _) => CrystalElem::Rect(t.clone()),
        BasisVector::HalfPlus(t, _) => CrystalElem::HalfPlus(t.clone()),
        BasisVector::HalfMinus(t, _) => CrystalElem::HalfMinus(t.clone()),
        BasisVector::Tensor(facs) => CrystalElem::Tensor(
            TensorWord::new(facs.iter().map(to_crystal).collect())
                .expect("basis tensors are nonempty"),
        ),
    }
}

/// Follows the vector-level reflection orbit of `seed`: at each node the
/// weight picks the lowering or raising divided power, which must send the
/// vector to a single basis vector with coefficient exactly one, while the
/// opposite current kills it. The orbit is also matched against the
/// crystal-level reflection orbit.
pub fn check_extremal(
    m: &LoopModule,
    seed: &BasisVector,
    window: (Node, Node),
    depth: usize,
) -> Certificate {
    let params = json!({
        "window": [window.0, window.1],
        "depth": depth,
        "seed": seed.text(),
    });
    let (lo, hi) = window;
    let mut witnesses = Vec::new();
    let mut orbit: Vec<BasisVector> = vec![seed.clone()];
    let mut frontier: Vec<BasisVector> = vec![seed.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for v in &frontier {
            for i in lo..=hi {
                let c = v.weight().get(i);
                // Kill checks at the delta-term level certify all modes.
                let (kill_sign, op_sign) = if c >= 0 {
                    (Sign::Plus, Sign::Minus)
                } else {
                    (Sign::Minus, Sign::Plus)
                };
                match m.x_series(kill_sign, i, v) {
                    Ok(terms) => {
                        if !terms.is_empty() {
                            witnesses.push(format!(
                                "{} node {} does not kill {}",
                                kill_sign.label(),
                                i,
                                v.text()
                            ));
                        }
                    }
                    Err(e) => witnesses.push(e.to_string()),
                }
                if c == 0 {
                    match m.x_series(Sign::Minus, i, v) {
                        Ok(terms) => {
                            if !terms.is_empty() {
                                witnesses.push(format!(
                                    "- node {} does not kill weight-zero {}",
                                    i,
                                    v.text()
                                ));
                            }
                        }
                        Err(e) => witnesses.push(e.to_string()),
                    }
                    continue;
                }
                match m.divided_power_apply(op_sign, i, c.unsigned_abs() as u32, v) {
                    Ok(lin) => {
                        let mut terms: Vec<(&BasisVector, &Scalar)> = lin.iter().collect();
                        if terms.len() != 1 {
                            witnesses.push(format!(
                                "reflection at node {} spreads {} over {} vectors",
                                i,
                                v.text(),
                                terms.len()
                            ));
                            continue;
                        }
                        let (w, coeff) = terms.pop().unwrap();
                        if !coeff.is_one() {
                            witnesses.push(format!(
                                "reflection at node {} lands on {} with coefficient {}",
                                i,
                                w.text(),
                                coeff.text()
                            ));
                        }
                        if m.check_member(w).is_err() {
                            witnesses.push(format!(
                                "reflection at node {} leaves the basis: {}",
                                i,
                                w.text()
                            ));
                        }
                        if !orbit.contains(w) {
                            orbit.push(w.clone());
                            next.push(w.clone());
                        }
                    }
                    Err(e) => witnesses.push(e.to_string()),
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    // Crystal cross-check.
    let cr = extremal_orbit(&to_crystal(seed), window, depth);
    for (el, node) in &cr.failures {
        witnesses.push(format!("crystal orbit fails at node {} on {}", node, el.text()));
    }
    let mut vec_set: Vec<CrystalElem> = orbit.iter().map(to_crystal).collect();
    vec_set.sort();
    vec_set.dedup();
    let mut cr_set = cr.elements.clone();
    cr_set.sort();
    cr_set.dedup();
    if vec_set != cr_set {
        witnesses.push(format!(
            "vector orbit ({} elements) disagrees with crystal orbit ({} elements)",
            vec_set.len(),
            cr_set.len()
        ));
    }
    orbit.sort();
    Certificate {
        name: "extremal".into(),
        params,
        pass: witnesses.is_empty(),
        details: json!({
            "orbit": orbit.iter().map(|v| v.text()).collect::<Vec<_>>(),
        }),
        witnesses,
    }
}

/// Builds the directed graph of nonzero zero-mode matrix elements on the
/// truncated basis and reports its strongly connected components; a single
/// component witnesses that every vector is cyclic.
pub fn check_connected(m: &LoopModule, window: (Node, Node)) -> Certificate {
    let params = json!({ "window": [window.0, window.1] });
    // The full declared basis over the window, not the orbit of the
    // generator: a proper invariant subspace must show up as its own
    // component even when the generator cannot reach it.
    let basis = m.basis_enum(window);
    let (lo, hi) = window;
    let mut graph: DiGraph<usize, ()> = DiGraph::new();
    let idx: BTreeMap<&BasisVector, NodeIndex> = basis
        .iter()
        .enumerate()
        .map(|(k, v)| (v, graph.add_node(k)))
        .collect();
    let mut undefined = Vec::new();
    for v in &basis {
        for sign in [Sign::Plus, Sign::Minus] {
            for i in lo..=hi {
                match m.mode_apply(sign, i, 0, v) {
                    Ok(lin) => {
                        for (t, c) in lin.iter() {
                            if c.is_zero() {
                                continue;
                            }
                            if let Some(&ti) = idx.get(t) {
                                graph.update_edge(idx[v], ti, ());
                            }
                        }
                    }
                    Err(e) => undefined.push(e.to_string()),
                }
            }
        }
    }
    let mut comps = tarjan_scc(&graph);
    for c in &mut comps {
        c.sort();
    }
    comps.sort();
    let sizes: Vec<usize> = comps.iter().map(|c| c.len()).collect();
    let components: Vec<Vec<String>> = comps
        .iter()
        .map(|c| {
            c.iter()
                .map(|&ix| basis[graph[ix]].text())
                .collect()
        })
        .collect();
    Certificate {
        name: "connected".into(),
        params,
        pass: comps.len() == 1,
        details: json!({
            "basis": basis.len(),
            "components": comps.len(),
            "sizes": sizes,
            "members": components,
            "undefined": undefined,
        }),
        witnesses: if comps.len() == 1 {
            Vec::new()
        } else {
            vec![format!("{} strongly connected components", comps.len())]
        },
    }
}

/// String structure of a windowed character: at every node (after folding,
/// every residue) the character must split into complete strings.
/// Monomials whose string partners fall outside the window are whitelisted
/// as frontier terms and reported separately.
pub fn check_folded(chi: &QCharacter, n: Option<u32>, window: (Node, Node)) -> Certificate {
    let (lo, hi) = window;
    let params = json!({
        "window": [lo, hi],
        "n": n,
    });
    if chi.domain() != Domain::Aff {
        return Certificate {
            name: "folded".into(),
            params,
            pass: false,
            details: json!({ "error": "expected an unfolded character" }),
            witnesses: vec!["expected an unfolded character".into()],
        };
    }
    // A cut is excusable when every partner the string lacked sits partly
    // outside the window: the gap is the truncation boundary, not a hole
    // in the character.
    let outside = |m: &YMonomial| -> bool {
        m.exps().any(|(&(node, _), _)| node < lo || node > hi)
    };
    let excusable =
        |w: &StringWitness| -> bool { !w.missing.is_empty() && w.missing.iter().all(outside) };
    let mut witnesses = Vec::new();
    let mut frontier = Vec::new();
    let mut strings = 0usize;
    let mut singles = 0usize;
    match n {
        None => {
            for r in lo..=hi {
                let sd = string_decompose(chi, r);
                strings += sd.strings.len();
                singles += sd.singles.len();
                for w in &sd.witnesses {
                    if excusable(w) {
                        frontier.push(format!("node {}: {}", r, w.monomial.text()));
                    } else {
                        witnesses.push(format!("node {}: {}", r, w.monomial.text()));
                    }
                }
            }
        }
        Some(n) => {
            // Excusable cuts are located before folding: a folded witness
            // inherits the tag from an unfolded witness it projects from.
            let span = chi
                .terms()
                .flat_map(|(m, _)| m.exps().map(|(&(node, _), _)| node))
                .fold(None::<(Node, Node)>, |acc, node| match acc {
                    None => Some((node, node)),
                    Some((a, b)) => Some((a.min(node), b.max(node))),
                });
            let mut excused = Vec::new();
            if let Some((slo, shi)) = span {
                for r in slo..=shi {
                    for w in &string_decompose(chi, r).witnesses {
                        if excusable(w) {
                            excused.push((r, w.monomial.fold(n)));
                        }
                    }
                }
            }
            let folded = chi.fold(n);
            let modulus = n as Node + 1;
            for r in 0..=n as Node {
                let sd = string_decompose(&folded, r);
                strings += sd.strings.len();
                singles += sd.singles.len();
                for w in &sd.witnesses {
                    let hit = excused
                        .iter()
                        .any(|(ur, um)| ur.rem_euclid(modulus) == r && *um == w.monomial);
                    if hit {
                        frontier.push(format!("residue {}: {}", r, w.monomial.text()));
                    } else {
                        witnesses.push(format!("residue {}: {}", r, w.monomial.text()));
                    }
                }
            }
        }
    }
    Certificate {
        name: "folded".into(),
        params,
        pass: witnesses.is_empty(),
        details: json!({
            "strings": strings,
            "singles": singles,
            "frontier": frontier,
        }),
        witnesses,
    }
}

/// Compares the pole scan of row-with-row fusion against the closed form:
/// fusion of two length-l rows at ratio q^d is undefined exactly for even
/// d with |d| <= 2l - 2.
pub fn check_fusion_poles(l: i64, dlo: i64, dhi: i64) -> Certificate {
    let params = json!({ "ell": l, "drange": [dlo, dhi] });
    let mut witnesses = Vec::new();
    let mut undefined = Vec::new();
    for d in dlo..=dhi {
        let scan = fusion_defined(l, d);
        let closed = fusion_defined_closed(l, d);
        if scan != closed {
            witnesses.push(format!(
                "d={d}: scan says {}, closed form says {}",
                if scan { "defined" } else { "undefined" },
                if closed { "defined" } else { "undefined" }
            ));
        }
        if !closed {
            undefined.push(d);
        }
    }
    Certificate {
        name: "fusion-poles".into(),
        params,
        pass: witnesses.is_empty(),
        details: json!({ "undefined": undefined }),
        witnesses,
    }
}

fn spliceable_pairs(
    l: i64,
    a: SpectralParam,
    window: (Node, Node),
) -> Vec<(BasisVector, BasisVector)> {
    let (lo, hi) = window;
    let b = a.shift(l);
    let mut out = Vec::new();
    for t in enumerate_half_plus(l, lo, hi + 1) {
        for tp in enumerate_half_minus(0, lo, hi + 1) {
            if in_t_ell(&t, &tp) {
                out.push((
                    BasisVector::HalfPlus(t.clone(), a),
                    BasisVector::HalfMinus(tp.clone(), b),
                ));
            }
        }
    }
    out
}

fn splice_vector(pair: &BasisVector, a: SpectralParam) -> Result<BasisVector, String> {
    let BasisVector::Tensor(facs) = pair else {
        return Err(format!("not a fused pair: {}", pair.text()));
    };
    let [BasisVector::HalfPlus(t, _), BasisVector::HalfMinus(tp, _)] = facs.as_slice() else {
        return Err(format!("not a half-row pair: {}", pair.text()));
    };
    if !in_t_ell(t, tp) {
        return Err(format!("pair leaves the spliceable set: {}", pair.text()));
    }
    match pi_iso(t, tp) {
        Ok(row) => Ok(BasisVector::Row(row, a)),
        Err(e) => Err(e.to_string()),
    }
}

/// Fuses the upward and downward half-row modules at ratio q^l and checks
/// that on spliceable pairs, conjugating by the splice bijection
/// reproduces the finite-row module exactly: same delta terms (hence the
/// same action in every mode) and the same eigen content at every node.
pub fn check_two_construction(l: i64, a: SpectralParam, window: (Node, Node)) -> Certificate {
    let (lo, hi) = window;
    let params = json!({ "ell": l, "window": [lo, hi] });
    let fused = LoopModule::fuse(
        LoopModule::fundamental_plus(l, a),
        LoopModule::fundamental_minus(0, a.shift(l)),
    );
    let eflm = LoopModule::efl(l, a);
    let mut witnesses = Vec::new();
    let mut actions = 0usize;
    let pairs = spliceable_pairs(l, a, window);
    for (plus, minus) in &pairs {
        let pair = BasisVector::Tensor(vec![plus.clone(), minus.clone()]);
        let row = match splice_vector(&pair, a) {
            Ok(r) => r,
            Err(e) => {
                witnesses.push(e);
                continue;
            }
        };
        for i in (lo - 1)..=(hi + 1) {
            if fused.phi_eigen(i, &pair) != eflm.phi_eigen(i, &row) {
                witnesses.push(format!(
                    "eigen mismatch at node {} on {}",
                    i,
                    pair.text()
                ));
            }
        }
        for sign in [Sign::Plus, Sign::Minus] {
            for i in lo..=hi {
                let got = match fused.x_series(sign, i, &pair) {
                    Ok(terms) => terms,
                    Err(e) => {
                        witnesses.push(format!("fusion undefined: {e}"));
                        continue;
                    }
                };
                let mut mapped: Vec<(SpectralParam, BasisVector, Scalar)> = Vec::new();
                let mut broken = false;
                for dt in got {
                    match splice_vector(&dt.target, a) {
                        Ok(r) => mapped.push((dt.support, r, dt.coeff)),
                        Err(e) => {
                            witnesses.push(format!(
                                "{} node {} on {}: {}",
                                sign.label(),
                                i,
                                pair.text(),
                                e
                            ));
                            broken = true;
                        }
                    }
                }
                if broken {
                    continue;
                }
                mapped.sort_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1)));
                let want: Vec<(SpectralParam, BasisVector, Scalar)> = eflm
                    .x_series(sign, i, &row)
                    .expect("row module actions are total")
                    .into_iter()
                    .map(|dt| (dt.support, dt.target, dt.coeff))
                    .collect();
                actions += 1;
                if mapped != want {
                    witnesses.push(format!(
                        "{} node {} disagrees on {}",
                        sign.label(),
                        i,
                        pair.text()
                    ));
                }
            }
        }
    }
    Certificate {
        name: "two-construction".into(),
        params,
        pass: witnesses.is_empty(),
        details: json!({ "pairs": pairs.len(), "actions": actions }),
        witnesses,
    }
}

/// Checks that the splice bijection intertwines the crystal operators on
/// spliceable pairs with those on finite rows, sending undefined to
/// undefined.
pub fn check_crystal_iso(l: i64, window: (Node, Node)) -> Certificate {
    let (lo, hi) = window;
    let params = json!({ "ell": l, "window": [lo, hi] });
    let mut witnesses = Vec::new();
    let mut pairs = 0usize;
    for t in enumerate_half_plus(l, lo, hi + 1) {
        for tp in enumerate_half_minus(0, lo, hi + 1) {
            if !in_t_ell(&t, &tp) {
                continue;
            }
            pairs += 1;
            let word = CrystalElem::Tensor(TensorWord::pair(
                CrystalElem::HalfPlus(t.clone()),
                CrystalElem::HalfMinus(tp.clone()),
            ));
            let row = match pi_iso(&t, &tp) {
                Ok(r) => r,
                Err(e) => {
                    witnesses.push(e.to_string());
                    continue;
                }
            };
            for i in lo..=hi {
                for (opname, lhs, rhs) in [
                    ("etilde", word.etilde(i), row.etilde(i)),
                    ("ftilde", word.ftilde(i), row.ftilde(i)),
                ] {
                    match (lhs, rhs) {
                        (None, None) => {}
                        (Some(w2), Some(r2)) => {
                            let ok = match &w2 {
                                CrystalElem::Tensor(tw) => match tw.factors() {
                                    [CrystalElem::HalfPlus(t2), CrystalElem::HalfMinus(tp2)] => {
                                        in_t_ell(t2, tp2)
                                            && pi_iso(t2, tp2).map(|r| r == r2).unwrap_or(false)
                                    }
                                    _ => false,
                                },
                                _ => false,
                            };
                            if !ok {
                                witnesses.push(format!(
                                    "{opname} at node {} maps ({}, {}) off the spliced row",
                                    i,
                                    t.text(),
                                    tp.text()
                                ));
                            }
                        }
                        (Some(_), None) => witnesses.push(format!(
                            "{opname} at node {} defined on the pair ({}, {}) only",
                            i,
                            t.text(),
                            tp.text()
                        )),
                        (None, Some(_)) => witnesses.push(format!(
                            "{opname} at node {} defined on the row of ({}, {}) only",
                            i,
                            t.text(),
                            tp.text()
                        )),
                    }
                }
            }
        }
    }
    Certificate {
        name: "crystal-iso".into(),
        params,
        pass: witnesses.is_empty(),
        details: json!({ "pairs": pairs }),
        witnesses,
    }
}

/// Checks that the strict-tuple chain of k vector factors is isomorphic to
/// the length-k row module: the entrywise bijection intertwines every
/// current at the delta-term level and matches the eigen content node by
/// node.
pub fn check_column_iso(k: i64, a: SpectralParam, window: (Node, Node)) -> Certificate {
    let (lo, hi) = window;
    let params = json!({ "k": k, "window": [lo, hi] });
    let iso = ColumnEflIso::new(k, a);
    let col = iso.column_module();
    let eflm = iso.efl_module();
    let mut witnesses = Vec::new();
    let basis = col.basis_enum(window);
    let mut actions = 0usize;
    for v in &basis {
        let fv = match iso.backward(v) {
            Ok(w) => w,
            Err(e) => {
                witnesses.push(e.to_string());
                continue;
            }
        };
        for i in (lo - 1)..=(hi + 1) {
            if col.phi_eigen(i, v) != eflm.phi_eigen(i, &fv) {
                witnesses.push(format!("eigen mismatch at node {} on {}", i, v.text()));
            }
        }
        for sign in [Sign::Plus, Sign::Minus] {
            for i in lo..=hi {
                let got = match col.x_series(sign, i, v) {
                    Ok(terms) => terms,
                    Err(e) => {
                        witnesses.push(format!("column action undefined: {e}"));
                        continue;
                    }
                };
                let mut mapped: Vec<(SpectralParam, BasisVector, Scalar)> = Vec::new();
                let mut broken = false;
                for dt in got {
                    match iso.backward(&dt.target) {
                        Ok(w) => mapped.push((dt.support, w, dt.coeff)),
                        Err(e) => {
                            witnesses.push(format!(
                                "{} node {} on {}: {}",
                                sign.label(),
                                i,
                                v.text(),
                                e
                            ));
                            broken = true;
                        }
                    }
                }
                if broken {
                    continue;
                }
                mapped.sort_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1)));
                let want: Vec<(SpectralParam, BasisVector, Scalar)> = eflm
                    .x_series(sign, i, &fv)
                    .expect("row module actions are total")
                    .into_iter()
                    .map(|dt| (dt.support, dt.target, dt.coeff))
                    .collect();
                actions += 1;
                if mapped != want {
                    witnesses.push(format!(
                        "{} node {} disagrees on {}",
                        sign.label(),
                        i,
                        v.text()
                    ));
                }
            }
        }
    }
    Certificate {
        name: "column-iso".into(),
        params,
        pass: witnesses.is_empty(),
        details: json!({ "basis": basis.len(), "actions": actions }),
        witnesses,
    }
}
