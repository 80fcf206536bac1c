//! Oracle-backed unit tests and property tests for the exact arithmetic
//! kernel: q-combinatorics, psi evaluation, mode expansions against a
//! truncated series-division oracle, canonical-form laws, and round-trips.

use loopweight::scalar::{
    psi_eval, psi_eval_inverse, psi_mode, qbinomial, qfactorial, qint, register_symbol, ExpandAt,
    Mono, Poly, Scalar, ScalarError, SpectralParam,
};
use num_bigint::BigInt;
use proptest::prelude::*;

fn sym(name: &str) -> u32 {
    register_symbol(name).unwrap()
}

fn qp(k: i64) -> Scalar {
    Scalar::q_pow(k)
}

/// Truncated power-series division: coefficients of num/den up to degree m,
/// where den[0] is invertible. Independent oracle for psi_mode.
fn series_div(num: &[Scalar], den: &[Scalar], m: usize) -> Vec<Scalar> {
    let d0inv = den[0].inv().unwrap();
    let mut out: Vec<Scalar> = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let mut acc = num.get(k).cloned().unwrap_or_else(Scalar::zero);
        for j in 0..k {
            if let Some(d) = den.get(k - j) {
                acc = acc.sub(&out[j].mul(d));
            }
        }
        out.push(acc.mul(&d0inv));
    }
    out
}

#[test]
fn qint_small_values() {
    assert!(qint(0).is_zero());
    assert!(qint(1).is_one());
    assert_eq!(qint(2), qp(1).add(&qp(-1)));
    assert_eq!(qint(3), qp(2).add(&Scalar::one()).add(&qp(-2)));
    assert_eq!(qint(-2), qint(2).neg());
}

#[test]
fn qint_matches_rational_definition() {
    // (q^l - q^-l)/(q - q^-1) via field ops must agree with the closed form.
    for l in -6..=6 {
        let lhs = qp(l).sub(&qp(-l)).div(&qp(1).sub(&qp(-1))).unwrap();
        assert_eq!(lhs, qint(l), "l={l}");
    }
}

#[test]
fn qbinomial_examples_and_range() {
    assert!(qbinomial(2, 0).unwrap().is_one());
    assert_eq!(qbinomial(2, 1).unwrap(), qp(1).add(&qp(-1)));
    assert_eq!(qbinomial(3, 1).unwrap(), qp(2).add(&Scalar::one()).add(&qp(-2)));
    assert!(matches!(qbinomial(2, 3), Err(ScalarError::BinomialRange { .. })));
    assert!(matches!(qbinomial(2, -1), Err(ScalarError::BinomialRange { .. })));
    assert!(matches!(qbinomial(-1, 0), Err(ScalarError::BinomialRange { .. })));
}

#[test]
fn qbinomial_symmetry_recurrence_polynomiality() {
    for m in 0..=8i64 {
        for mp in 0..=m {
            let b = qbinomial(m, mp).unwrap();
            assert!(b.denominator().is_one(), "[{m},{mp}] not polynomial");
            assert_eq!(b, qbinomial(m, m - mp).unwrap());
            if m >= 1 && mp >= 1 && mp <= m - 1 {
                let rec = qp(mp)
                    .mul(&qbinomial(m - 1, mp).unwrap())
                    .add(&qp(mp - m).mul(&qbinomial(m - 1, mp - 1).unwrap()));
                assert_eq!(b, rec, "recurrence at [{m},{mp}]");
            }
        }
    }
}

#[test]
fn qfactorial_values() {
    assert!(qfactorial(0).is_one());
    assert!(qfactorial(1).is_one());
    assert_eq!(qfactorial(2), qint(2));
    assert_eq!(qfactorial(3), qint(3).mul(&qint(2)));
}

#[test]
fn psi_eval_examples() {
    assert!(psi_eval(&qp(2)).unwrap().is_zero());
    assert!(matches!(psi_eval(&Scalar::one()), Err(ScalarError::Pole)));
    // Rational arithmetic oracle: (q - q^-1 * q^-2)/(1 - q^-2).
    let oracle = qp(1).sub(&qp(-3)).div(&Scalar::one().sub(&qp(-2))).unwrap();
    assert_eq!(psi_eval(&qp(-2)).unwrap(), oracle);
    assert_eq!(psi_eval(&qp(-2)).unwrap(), qint(2));
    assert!(matches!(psi_eval_inverse(&qp(2)), Err(ScalarError::InverseOfZero)));
    assert!(psi_eval_inverse(&Scalar::one()).unwrap().is_zero());
}

#[test]
fn psi_inverse_is_reciprocal() {
    let a = sym("a0");
    let b = sym("b0");
    let cross = Scalar::from_mono(Mono::base(a, 1).mul(&Mono::base(b, -1)));
    for x in [qp(4), qp(-2), Scalar::from_int(3), cross.clone(), cross.mul(&qp(5))] {
        let p = psi_eval(&x).unwrap();
        let pi = psi_eval_inverse(&x).unwrap();
        assert!(p.mul(&pi).is_one(), "x={}", x.text());
    }
}

#[test]
fn psi_cross_group_is_pole_free_nonzero() {
    let a = sym("a0");
    let b = sym("b0");
    // Formal transcendental ratio: psi and its inverse both defined, nonzero.
    for d in -4..=4 {
        let x = Scalar::from_mono(Mono::base(a, 1).mul(&Mono::base(b, -1)).mul(&Mono::q_pow(d)));
        assert!(!psi_eval(&x).unwrap().is_zero());
        assert!(!psi_eval_inverse(&x).unwrap().is_zero());
    }
}

fn psi_num_den(c: &Scalar, sign: i8) -> (Vec<Scalar>, Vec<Scalar>) {
    // Series in z at zero: psi(cz) = (q - q^-1 c z)/(1 - c z).
    let num = vec![qp(1), qp(-1).neg().mul(c)];
    let den = vec![Scalar::one(), c.neg()];
    if sign == 1 {
        (num, den)
    } else {
        (den, num)
    }
}

fn psi_num_den_at_inf(c: &Scalar, sign: i8) -> (Vec<Scalar>, Vec<Scalar>) {
    // Substituting z = 1/u: psi(c/u) = (q^-1 - q c^-1 u)/(1 - c^-1 u), a
    // series in u whose u^m coefficient is the z^-m mode.
    let cinv = c.inv().unwrap();
    let num = vec![qp(-1), qp(1).neg().mul(&cinv)];
    let den = vec![Scalar::one(), cinv.neg()];
    if sign == 1 {
        (num, den)
    } else {
        (den, num)
    }
}

#[test]
fn psi_mode_matches_series_division_oracle() {
    let c = SpectralParam::new(sym("a0"), 3);
    let cs = c.as_scalar();
    const M: usize = 6;
    for sign in [1i8, -1] {
        let (num, den) = psi_num_den(&cs, sign);
        let at0 = series_div(&num, &den, M);
        let (num, den) = psi_num_den_at_inf(&cs, sign);
        let atinf = series_div(&num, &den, M);
        for m in 0..=M {
            assert_eq!(
                psi_mode(&c, sign, ExpandAt::Zero, m as u32),
                at0[m],
                "sign={sign} at-zero m={m}"
            );
            assert_eq!(
                psi_mode(&c, sign, ExpandAt::Infinity, m as u32),
                atinf[m],
                "sign={sign} at-infinity m={m}"
            );
        }
    }
}

#[test]
fn psi_mode_finite_sum_consistency() {
    // sum_m psi_mode(c,+1,at-zero,m) z^m times (1 - cz) == q - q^-1 cz up to
    // degree M, exactly: coefficient k of the product is s_k - c*s_{k-1}.
    let c = SpectralParam::new(sym("a0"), -2);
    let cs = c.as_scalar();
    const M: u32 = 8;
    for k in 0..=M {
        let sk = psi_mode(&c, 1, ExpandAt::Zero, k);
        let prev = if k == 0 {
            Scalar::zero()
        } else {
            cs.mul(&psi_mode(&c, 1, ExpandAt::Zero, k - 1))
        };
        let prod_coeff = sk.sub(&prev);
        let expected = match k {
            0 => qp(1),
            1 => qp(-1).neg().mul(&cs),
            _ => Scalar::zero(),
        };
        assert_eq!(prod_coeff, expected, "k={k}");
    }
}

#[test]
fn canonical_forms_coincide() {
    // Same rational function built two ways normalizes identically.
    let x = Scalar::new(
        Poly::from_terms(vec![
            (Mono::one(), BigInt::from(1)),
            (Mono::q_pow(-2), BigInt::from(-1)),
        ]),
        Poly::from_terms(vec![
            (Mono::one(), BigInt::from(1)),
            (Mono::q_pow(-4), BigInt::from(-1)),
        ]),
    )
    .unwrap();
    let y = Scalar::one().div(&Scalar::one().add(&qp(-2))).unwrap();
    assert_eq!(x, y);
    let z = qp(2).sub(&Scalar::one()).mul(&qp(-1)).div(&qp(1).sub(&qp(-1))).unwrap();
    assert!(z.is_one());
}

#[test]
fn spectral_param_ratios() {
    let a = sym("a0");
    let b = sym("b0");
    let p1 = SpectralParam::new(a, 3);
    let p2 = SpectralParam::new(a, 1);
    assert_eq!(p1.ratio_mono(&p2), Mono::q_pow(2));
    let p3 = SpectralParam::new(b, 0);
    let r = p1.ratio_mono(&p3);
    assert_eq!(r, Mono::q_pow(3).mul(&Mono::base(a, 1)).mul(&Mono::base(b, -1)));
    assert_eq!(p1.shift(-3), SpectralParam::new(a, 0));
    for p in [p1, p2, p3, SpectralParam::new(b, -7)] {
        assert_eq!(SpectralParam::parse(&p.text()).unwrap(), p);
    }
}

#[test]
fn symbol_registry() {
    let id1 = sym("zz9");
    let id2 = sym("zz9");
    assert_eq!(id1, id2);
    assert!(register_symbol("q").is_err());
    assert!(register_symbol("").is_err());
    assert!(register_symbol("1abc").is_err());
    assert!(register_symbol("has space").is_err());
}

#[test]
fn text_examples() {
    assert_eq!(Scalar::zero().text(), "0");
    assert_eq!(qint(2).text(), "1*q^1 + 1*q^-1");
    let a = sym("a0");
    let s = Scalar::from_mono(Mono::base(a, 2).mul(&Mono::q_pow(-1))).mul(&Scalar::from_int(-3));
    assert_eq!(s.text(), "-3*q^-1*a0^2");
    assert_eq!(Scalar::parse("q^2 + -1").unwrap(), qp(2).sub(&Scalar::one()));
    assert_eq!(Scalar::parse("a0").unwrap(), Scalar::from_mono(Mono::base(a, 1)));
}

fn arb_poly(include_bases: bool) -> impl Strategy<Value = Poly> {
    let base_ids = prop_oneof![Just(0u8), Just(1u8)];
    let term = (
        -4i64..=4,
        proptest::option::of((base_ids, -3i64..=3)),
        -5i64..=5,
    );
    proptest::collection::vec(term, 0..5).prop_map(move |terms| {
        Poly::from_terms(
            terms
                .into_iter()
                .map(|(qe, base, c)| {
                    let mut m = Mono::q_pow(qe);
                    if include_bases {
                        if let Some((which, e)) = base {
                            let name = if which == 0 { "pa" } else { "pb" };
                            m = m.mul(&Mono::base(register_symbol(name).unwrap(), e));
                        }
                    }
                    (m, BigInt::from(c))
                })
                .collect(),
        )
    })
}

fn arb_scalar() -> impl Strategy<Value = Scalar> {
    (arb_poly(true), arb_poly(true))
        .prop_filter("nonzero denominator", |(_, d)| !d.is_zero())
        .prop_map(|(n, d)| Scalar::new(n, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
        if !b.is_zero() {
            prop_assert_eq!(a.div(&b).unwrap().mul(&b), a.clone());
            prop_assert_eq!(b.inv().unwrap().inv().unwrap(), b.clone());
        }
    }

    #[test]
    fn equality_agrees_with_cross_multiplication(a in arb_scalar(), b in arb_scalar()) {
        let cross = a.numerator().mul(b.denominator()) == b.numerator().mul(a.denominator());
        prop_assert_eq!(cross, a == b);
    }

    #[test]
    fn text_round_trip(a in arb_scalar()) {
        prop_assert_eq!(Scalar::parse(&a.text()).unwrap(), a);
    }

    #[test]
    fn json_round_trip(a in arb_scalar()) {
        prop_assert_eq!(Scalar::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn mul_mono_matches_mul(a in arb_scalar(), qe in -3i64..=3, be in -2i64..=2) {
        let m = Mono::q_pow(qe).mul(&Mono::base(register_symbol("pa").unwrap(), be));
        prop_assert_eq!(a.mul_mono(&m), a.mul(&Scalar::from_mono(m.clone())));
    }
}
