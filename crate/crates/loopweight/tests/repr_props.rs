//! Module-layer checks: explicit current actions on the tableau bases,
//! eigen series modes, fusion with exact evaluation, divided powers, the
//! column/row parameter bijection, truncation, and span certification.
//! Expected delta terms and coefficients are worked out by hand from the
//! defining formulas.

use loopweight::crystal::RowTableau;
use loopweight::monomial::{m_of_half_minus, m_of_half_plus, m_of_row, phi_of_monomial};
use loopweight::repr::{
    fusion_defined, fusion_defined_closed, BasisVector, ColumnEflIso, DeltaTerm, LinComb,
    LoopModule, ReprError, Sign,
};
use loopweight::scalar::{register_symbol, Scalar, SpectralParam};

fn param_a() -> SpectralParam {
    SpectralParam::new(register_symbol("a").unwrap(), 0)
}

fn row_vec(entries: &[i64], p: SpectralParam) -> BasisVector {
    BasisVector::Row(RowTableau::new(entries.to_vec()).unwrap(), p)
}

fn one_minus_q(e: i64) -> Scalar {
    Scalar::one().sub(&Scalar::q_pow(e))
}

/// Entries of a flat tensor of single boxes, in slot order.
fn tuple_entries(v: &BasisVector) -> Vec<i64> {
    let unbox = |f: &BasisVector| match f {
        BasisVector::Row(t, _) if t.len() == 1 => t.entries()[0],
        other => panic!("expected a box factor, got {other:?}"),
    };
    match v {
        BasisVector::Tensor(fs) => fs.iter().map(unbox).collect(),
        single => vec![unbox(single)],
    }
}

fn sorted_terms(ts: Vec<DeltaTerm>) -> Vec<(SpectralParam, BasisVector, Scalar)> {
    let mut out: Vec<_> = ts.into_iter().map(|t| (t.support, t.target, t.coeff)).collect();
    out.sort_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1)));
    out
}

#[test]
fn vector_action_and_modes() {
    let a = param_a();
    let m = LoopModule::vector_rep(a);
    for j in -2..=3i64 {
        let v = row_vec(&[j], a);
        // Lowering at j moves the box with delta support a q^j.
        let down = m.x_series(Sign::Minus, j, &v).unwrap();
        assert_eq!(down.len(), 1);
        assert_eq!(down[0].support, a.shift(j));
        assert_eq!(down[0].coeff, Scalar::one());
        assert_eq!(down[0].target, row_vec(&[j + 1], a));
        // Raising at j-1 moves it back with the same support as the
        // lowering that produced it.
        let up = m.x_series(Sign::Plus, j - 1, &v).unwrap();
        assert_eq!(up.len(), 1);
        assert_eq!(up[0].support, a.shift(j - 1));
        assert_eq!(up[0].target, row_vec(&[j - 1], a));
        // Off-node currents act by zero.
        assert!(m.x_series(Sign::Minus, j + 1, &v).unwrap().is_empty());
        assert!(m.x_series(Sign::Plus, j, &v).unwrap().is_empty());
        // The mode-r component scales by support^r.
        for r in [-2i64, 1, 3] {
            let out = m.mode_apply(Sign::Minus, j, r, &v).unwrap();
            let want = a.shift(j).as_scalar().pow_i64(r).unwrap();
            assert_eq!(out.coeff(&row_vec(&[j + 1], a)), want);
        }
    }
}

#[test]
fn finite_row_vacuum_actions() {
    let a = param_a();
    for l in 1..=3i64 {
        let m = LoopModule::efl(l, a);
        let vac = m.generator();
        // Lowering at l bumps the last entry, support a q.
        let down = m.x_series(Sign::Minus, l, &vac).unwrap();
        let mut entries: Vec<i64> = (1..l).collect();
        entries.push(l + 1);
        assert_eq!(down.len(), 1);
        assert_eq!(down[0].support, a.shift(1));
        assert_eq!(down[0].coeff, Scalar::one());
        assert_eq!(down[0].target, row_vec(&entries, a));
        // Raising at 0 pulls the first entry down, support a q^{l-1}.
        let up = m.x_series(Sign::Plus, 0, &vac).unwrap();
        let mut entries: Vec<i64> = vec![0];
        entries.extend(2..=l);
        assert_eq!(up.len(), 1);
        assert_eq!(up[0].support, a.shift(l - 1));
        assert_eq!(up[0].target, row_vec(&entries, a));
        // Interior currents die on the vacuum.
        for i in 1..l {
            assert!(m.x_series(Sign::Minus, i, &vac).unwrap().is_empty());
            assert!(m.x_series(Sign::Plus, i, &vac).unwrap().is_empty());
        }
    }
}

#[test]
fn half_row_vacuum_actions() {
    let a = param_a();
    let plus = LoopModule::fundamental_plus(1, a);
    let vac = plus.generator();
    let down = plus.x_series(Sign::Minus, 1, &vac).unwrap();
    assert_eq!(down.len(), 1);
    assert_eq!(down[0].support, a.shift(1));
    assert_eq!(down[0].coeff, Scalar::one());
    for i in -3..=4i64 {
        assert!(plus.x_series(Sign::Plus, i, &vac).unwrap().is_empty());
        if i != 1 {
            assert!(plus.x_series(Sign::Minus, i, &vac).unwrap().is_empty());
        }
    }

    let minus = LoopModule::fundamental_minus(0, a);
    let mvac = minus.generator();
    let up = minus.x_series(Sign::Plus, 0, &mvac).unwrap();
    assert_eq!(up.len(), 1);
    assert_eq!(up[0].support, a.shift(-1));
    assert_eq!(up[0].coeff, Scalar::one());
    for i in -4..=3i64 {
        assert!(minus.x_series(Sign::Minus, i, &mvac).unwrap().is_empty());
        if i != 0 {
            assert!(minus.x_series(Sign::Plus, i, &mvac).unwrap().is_empty());
        }
    }
}

#[test]
fn zero_modes_of_the_eigen_series_read_the_weight() {
    let a = param_a();
    let modules = [
        LoopModule::vector_rep(a),
        LoopModule::efl(2, a),
        LoopModule::fundamental_plus(1, a),
        LoopModule::fundamental_minus(0, a),
        LoopModule::rect(2, 2, a),
    ];
    for m in &modules {
        for v in m.basis_enum((-1, 2)) {
            for i in -2..=3i64 {
                let w = v.weight().get(i);
                let at_zero = m.phi_mode_apply(i, Sign::Plus, 0, &v);
                assert_eq!(at_zero.coeff(&v), Scalar::q_pow(w), "{m:?} {v:?} node {i}");
                let at_inf = m.phi_mode_apply(i, Sign::Minus, 0, &v);
                assert_eq!(at_inf.coeff(&v), Scalar::q_pow(-w));
            }
        }
    }
}

#[test]
fn eigen_factors_match_monomial_content() {
    // The node-i eigen factors of a basis vector are exactly the node-i
    // variables of its loop-weight monomial.
    let a = param_a();
    let efl = LoopModule::efl(2, a);
    for v in efl.basis_enum((-2, 3)) {
        let BasisVector::Row(t, _) = &v else { unreachable!() };
        let mono = m_of_row(t, a);
        for i in -3..=5i64 {
            assert_eq!(efl.phi_eigen(i, &v), phi_of_monomial(&mono, i), "{t:?} node {i}");
        }
    }
    let plus = LoopModule::fundamental_plus(1, a);
    for v in plus.basis_enum((-2, 3)) {
        let BasisVector::HalfPlus(t, _) = &v else { unreachable!() };
        let mono = m_of_half_plus(t, a);
        for i in -3..=5i64 {
            assert_eq!(plus.phi_eigen(i, &v), phi_of_monomial(&mono, i), "{t:?} node {i}");
        }
    }
    let minus = LoopModule::fundamental_minus(0, a);
    for v in minus.basis_enum((-3, 2)) {
        let BasisVector::HalfMinus(t, _) = &v else { unreachable!() };
        let mono = m_of_half_minus(t, a);
        for i in -4..=4i64 {
            assert_eq!(minus.phi_eigen(i, &v), phi_of_monomial(&mono, i), "{t:?} node {i}");
        }
    }
}

#[test]
fn fused_action_worked_example() {
    // Two boxes at ratio q^5. The minus current keeps the right term bare
    // and weights the left term by the right eigen value at the support.
    let a = param_a();
    let b = a.shift(5);
    let m = LoopModule::fuse(LoopModule::vector_rep(a), LoopModule::vector_rep(b));
    let v = m.generator();
    let down = sorted_terms(m.x_series(Sign::Minus, 1, &v).unwrap());
    let left_target = BasisVector::Tensor(vec![row_vec(&[2], a), row_vec(&[1], b)]);
    let right_target = BasisVector::Tensor(vec![row_vec(&[1], a), row_vec(&[2], b)]);
    let left_coeff = Scalar::q_pow(1)
        .mul(&one_minus_q(3))
        .mul(&one_minus_q(5).inv().unwrap());
    assert_eq!(
        down,
        vec![
            (a.shift(1), left_target, left_coeff),
            (b.shift(1), right_target, Scalar::one()),
        ]
    );
    // The plus current mirrors: left bare, right weighted by the left.
    let up = sorted_terms(m.x_series(Sign::Plus, 0, &v).unwrap());
    let left_target = BasisVector::Tensor(vec![row_vec(&[0], a), row_vec(&[1], b)]);
    let right_target = BasisVector::Tensor(vec![row_vec(&[1], a), row_vec(&[0], b)]);
    let right_coeff = Scalar::q_pow(-1)
        .mul(&one_minus_q(-3))
        .mul(&one_minus_q(-5).inv().unwrap());
    assert_eq!(
        up,
        vec![
            (a, left_target, Scalar::one()),
            (b, right_target, right_coeff),
        ]
    );
}

#[test]
fn fusion_pole_and_zero() {
    let a = param_a();
    // Equal parameters put the evaluation on a pole of the eigen value.
    let m = LoopModule::fuse(LoopModule::vector_rep(a), LoopModule::vector_rep(a));
    let err = m.x_series(Sign::Minus, 1, &m.generator()).unwrap_err();
    match err {
        ReprError::FusionUndefined { node, point, .. } => {
            assert_eq!(node, 1);
            assert_eq!(point, a.shift(1));
        }
        other => panic!("expected a fusion pole, got {other:?}"),
    }
    // Ratio q^2 lands on the numerator zero instead: the left term drops.
    let b = a.shift(2);
    let m = LoopModule::fuse(LoopModule::vector_rep(a), LoopModule::vector_rep(b));
    let down = m.x_series(Sign::Minus, 1, &m.generator()).unwrap();
    assert_eq!(down.len(), 1);
    assert_eq!(down[0].support, b.shift(1));
    assert_eq!(down[0].coeff, Scalar::one());
    assert_eq!(
        down[0].target,
        BasisVector::Tensor(vec![row_vec(&[1], a), row_vec(&[2], b)])
    );
}

#[test]
fn fusion_scan_matches_closed_form() {
    for l in 1..=3i64 {
        for d in -6..=6i64 {
            assert_eq!(fusion_defined(l, d), fusion_defined_closed(l, d), "l={l} d={d}");
        }
    }
}

#[test]
fn nesting_order_does_not_change_the_action() {
    let a = param_a();
    let parts = [a, a.shift(4), a.shift(9)];
    let left_nested = LoopModule::fuse(
        LoopModule::fuse(LoopModule::vector_rep(parts[0]), LoopModule::vector_rep(parts[1])),
        LoopModule::vector_rep(parts[2]),
    );
    let right_nested = LoopModule::fuse(
        LoopModule::vector_rep(parts[0]),
        LoopModule::fuse(LoopModule::vector_rep(parts[1]), LoopModule::vector_rep(parts[2])),
    );
    for v in left_nested.basis_enum((0, 2)) {
        for sign in [Sign::Plus, Sign::Minus] {
            for i in 0..=2i64 {
                let l = sorted_terms(left_nested.x_series(sign, i, &v).unwrap());
                let r = sorted_terms(right_nested.x_series(sign, i, &v).unwrap());
                assert_eq!(l, r, "{v:?} {} {i}", sign.label());
            }
        }
    }
}

#[test]
fn divided_powers_step_along_strings_with_unit_coefficient() {
    let a = param_a();
    for d in [3i64, 5, 7] {
        let b = a.shift(d);
        let m = LoopModule::fuse(LoopModule::vector_rep(a), LoopModule::vector_rep(b));
        let top = m.generator();
        let bottom = BasisVector::Tensor(vec![row_vec(&[2], a), row_vec(&[2], b)]);
        let down = m.divided_power_apply(Sign::Minus, 1, 2, &top).unwrap();
        let mut want = LinComb::zero();
        want.add_term(bottom.clone(), Scalar::one());
        assert_eq!(down, want, "d={d}");
        let up = m.divided_power_apply(Sign::Plus, 1, 2, &bottom).unwrap();
        let mut want = LinComb::zero();
        want.add_term(top.clone(), Scalar::one());
        assert_eq!(up, want, "d={d}");
    }
}

#[test]
fn column_bijection_intertwines_the_actions() {
    let a = param_a();
    for k in [2i64, 3] {
        let iso = ColumnEflIso::new(k, a);
        let efl = iso.efl_module();
        let col = iso.column_module();
        for v in efl.basis_enum((-1, 3)) {
            let fv = iso.forward(&v).unwrap();
            assert_eq!(iso.backward(&fv).unwrap(), v);
            for sign in [Sign::Plus, Sign::Minus] {
                for i in -1..=3i64 {
                    let through_row = sorted_terms(
                        efl.x_series(sign, i, &v)
                            .unwrap()
                            .into_iter()
                            .map(|dt| DeltaTerm {
                                support: dt.support,
                                coeff: dt.coeff,
                                target: iso.forward(&dt.target).unwrap(),
                            })
                            .collect(),
                    );
                    let through_chain = sorted_terms(col.x_series(sign, i, &fv).unwrap());
                    assert_eq!(through_row, through_chain, "k={k} {v:?} {} {i}", sign.label());
                }
            }
        }
    }
}

#[test]
fn strict_tuples_span_a_submodule_of_the_box_chain() {
    let a = param_a();
    let chain = LoopModule::fuse(LoopModule::vector_rep(a), LoopModule::vector_rep(a.shift(-2)));
    let report = chain
        .submodule_span(
            |v| {
                let t = tuple_entries(v);
                t.windows(2).all(|w| w[0] < w[1])
            },
            (0, 3),
            (-1, 1),
        )
        .unwrap();
    assert!(report.ok(), "violations: {:?}", report.violations);
    assert_eq!(report.members, 10, "strict pairs with entries in 0..=4");
    assert_eq!(report.mode_residuals, 0);
    // The reversed predicate is not closed: a lowering escapes from the
    // weakly decreasing pairs into the strict ones.
    let report = chain
        .submodule_span(
            |v| {
                let t = tuple_entries(v);
                t.windows(2).all(|w| w[0] >= w[1])
            },
            (0, 3),
            (-1, 1),
        )
        .unwrap();
    assert!(!report.ok());
}

#[test]
fn rectangle_worked_actions() {
    let a = param_a();
    let m = LoopModule::rect(2, 2, a);
    let v = m.generator();
    // Both candidate moves at node 1 break column strictness; the fusion
    // zeros kill them exactly.
    assert!(m.x_series(Sign::Minus, 1, &v).unwrap().is_empty());
    // At node 2 only the bottom-right cell can move.
    let down = m.x_series(Sign::Minus, 2, &v).unwrap();
    assert_eq!(down.len(), 1);
    assert_eq!(down[0].support, a.shift(2));
    assert_eq!(down[0].coeff, Scalar::one());
    match &down[0].target {
        BasisVector::Rect(t, p) => {
            assert_eq!(*p, a);
            assert_eq!(t.entry(2, 2), 3);
            assert_eq!(t.entry(2, 1), 2);
        }
        other => panic!("expected a rectangle target, got {other:?}"),
    }
    // Raising at 0 moves the top-left cell.
    let up = m.x_series(Sign::Plus, 0, &v).unwrap();
    assert_eq!(up.len(), 1);
    match &up[0].target {
        BasisVector::Rect(t, _) => assert_eq!(t.entry(1, 1), 0),
        other => panic!("expected a rectangle target, got {other:?}"),
    }
}

#[test]
fn actions_shift_weights_by_simple_roots() {
    let a = param_a();
    let modules = [
        LoopModule::vector_rep(a),
        LoopModule::efl(2, a),
        LoopModule::fundamental_plus(1, a),
        LoopModule::fundamental_minus(0, a),
        LoopModule::rect(2, 2, a),
        LoopModule::fuse(LoopModule::vector_rep(a), LoopModule::vector_rep(a.shift(5))),
    ];
    for m in &modules {
        for v in m.basis_enum((-1, 2)) {
            for i in -2..=3i64 {
                for (sign, delta) in [(Sign::Minus, -1), (Sign::Plus, 1)] {
                    for dt in m.x_series(sign, i, &v).unwrap() {
                        let mut want = v.weight();
                        want.add_alpha(i, delta);
                        assert_eq!(dt.target.weight(), want, "{m:?} {v:?} {} {i}", sign.label());
                    }
                }
            }
        }
    }
}

#[test]
fn truncation_reaches_the_windowed_basis() {
    let a = param_a();
    for l in 1..=2i64 {
        let m = LoopModule::efl(l, a);
        let tr = m.truncate((-2, 3), None).unwrap();
        let mut expect = m.basis_enum((-2, 3));
        expect.sort();
        assert_eq!(tr.basis, expect, "l={l}");
        assert!(tr.contains(&m.generator()));
    }
    let m = LoopModule::vector_rep(a);
    let tr = m.truncate((0, 4), None).unwrap();
    assert_eq!(tr.basis.len(), 6, "boxes 0..=5");
}

#[test]
fn membership_checks() {
    let a = param_a();
    let modules = [
        LoopModule::vector_rep(a),
        LoopModule::efl(2, a),
        LoopModule::fundamental_plus(1, a),
        LoopModule::fundamental_minus(0, a),
        LoopModule::rect(2, 2, a),
        LoopModule::column(2, a),
    ];
    for m in &modules {
        for v in m.basis_enum((0, 2)) {
            m.check_member(&v).unwrap();
        }
    }
    // Wrong parameter and wrong family are both rejected.
    let m = LoopModule::efl(2, a);
    assert!(m.check_member(&row_vec(&[1, 2], a.shift(1))).is_err());
    assert!(m.check_member(&row_vec(&[1], a)).is_err());
    assert!(m.x_series(Sign::Minus, 1, &row_vec(&[1], a)).is_err());
}

#[test]
fn lincomb_and_vector_json_round_trips() {
    let a = param_a();
    let modules = [
        LoopModule::efl(2, a),
        LoopModule::fundamental_plus(1, a),
        LoopModule::fundamental_minus(0, a),
        LoopModule::rect(2, 2, a),
        LoopModule::column(2, a),
    ];
    for m in &modules {
        for v in m.basis_enum((0, 2)).into_iter().take(6) {
            let back = BasisVector::from_json(&v.to_json()).unwrap();
            assert_eq!(back, v);
        }
    }
    let m = LoopModule::fuse(LoopModule::vector_rep(a), LoopModule::vector_rep(a.shift(5)));
    let x = m.mode_apply(Sign::Minus, 1, 2, &m.generator()).unwrap();
    assert!(!x.is_zero());
    let back = LinComb::from_json(&x.to_json()).unwrap();
    assert_eq!(back, x);
}
