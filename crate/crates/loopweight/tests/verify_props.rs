//! Certificate-level checks: relation sweeps, character comparisons,
//! connectivity, folding, and the module isomorphism certificates, each
//! against independently computed expectations.

use loopweight::crystal::RectTableau;
use loopweight::monomial::{box_mono, qchar_row, QCharacter, Domain};
use loopweight::repr::{BasisVector, LoopModule};
use loopweight::scalar::{register_symbol, SpectralParam};
use loopweight::verify::{
    check_column_iso, check_connected, check_crystal_iso, check_extremal, check_folded,
    check_fusion_poles, check_integrable, check_qchar, check_relations, check_thin,
    check_two_construction, module_qchar,
};

fn param_a() -> SpectralParam {
    SpectralParam::new(register_symbol("a").unwrap(), 0)
}

fn param_b() -> SpectralParam {
    SpectralParam::new(register_symbol("b").unwrap(), 0)
}

#[test]
fn relations_pass_for_the_vector_module() {
    let sweep = check_relations(&LoopModule::vector_rep(param_a()), (-1, 2), 2);
    assert!(sweep.ok(), "failures: {:?}", sweep.failures);
    assert!(sweep.undefined.is_empty());
    assert!(sweep.frontier.is_empty());
    assert!(sweep.instances > 0);
    assert!(sweep.certificates > 0);
}

#[test]
fn relations_pass_for_short_rows() {
    let sweep = check_relations(&LoopModule::efl(1, param_a()), (-1, 2), 2);
    assert!(sweep.ok(), "failures: {:?}", sweep.failures);
    let sweep = check_relations(&LoopModule::efl(2, param_a()), (0, 3), 1);
    assert!(sweep.ok(), "failures: {:?}", sweep.failures);
    assert!(sweep.undefined.is_empty());
}

#[test]
fn relations_pass_for_half_rows() {
    let sweep = check_relations(&LoopModule::fundamental_plus(1, param_a()), (-1, 2), 1);
    assert!(sweep.ok(), "failures: {:?}", sweep.failures);
    let sweep = check_relations(&LoopModule::fundamental_minus(0, param_a()), (-1, 2), 1);
    assert!(sweep.ok(), "failures: {:?}", sweep.failures);
}

#[test]
fn relations_pass_for_a_generic_fusion() {
    let m = LoopModule::fuse(
        LoopModule::efl(1, param_a()),
        LoopModule::efl(1, param_b()),
    );
    let sweep = check_relations(&m, (-1, 2), 1);
    assert!(sweep.ok(), "failures: {:?}", sweep.failures);
    assert!(sweep.undefined.is_empty());
}

#[test]
fn relations_report_poles_as_undefined_rather_than_failures() {
    // Two boxes at equal parameters sit at ratio q^0, inside the pole set.
    let m = LoopModule::fuse(
        LoopModule::vector_rep(param_a()),
        LoopModule::vector_rep(param_a()),
    );
    let sweep = check_relations(&m, (0, 1), 1);
    assert!(sweep.failures.is_empty());
    assert!(!sweep.undefined.is_empty());
}

#[test]
fn qchar_of_a_short_row_matches_the_tableau_sum() {
    let a = param_a();
    let m = LoopModule::efl(2, a);
    let chi = module_qchar(&m, (0, 2)).unwrap();
    assert_eq!(chi.num_terms(), 6);
    assert_eq!(chi.total_multiplicity(), 6);
    let cert = check_qchar(&m, (0, 2), &qchar_row(2, a, 0, 3));
    assert!(cert.pass, "witnesses: {:?}", cert.witnesses);
}

#[test]
fn qchar_detects_a_wrong_reference() {
    let a = param_a();
    let m = LoopModule::efl(2, a);
    let cert = check_qchar(&m, (0, 2), &qchar_row(2, a, 0, 2));
    assert!(!cert.pass);
    assert!(!cert.witnesses.is_empty());
}

#[test]
fn thin_holds_for_the_builtin_families() {
    let a = param_a();
    for (m, window) in [
        (LoopModule::vector_rep(a), (-2, 2)),
        (LoopModule::efl(2, a), (-1, 3)),
        (LoopModule::column(2, a), (-1, 3)),
        (LoopModule::rect(2, 2, a), (-1, 3)),
        (LoopModule::fundamental_plus(1, a), (-2, 2)),
        (LoopModule::fundamental_minus(0, a), (-2, 2)),
    ] {
        let cert = check_thin(&m, window);
        assert!(cert.pass, "{} not thin: {:?}", m.generator().text(), cert.witnesses);
    }
}

#[test]
fn integrability_bounds_follow_the_string_lengths() {
    let a = param_a();
    let cert = check_integrable(&LoopModule::vector_rep(a), (0, 2));
    assert!(cert.pass);
    assert_eq!(cert.details["nilpotency-bound"], 2);
    let cert = check_integrable(&LoopModule::efl(2, a), (0, 3));
    assert!(cert.pass);
    assert_eq!(cert.details["nilpotency-bound"], 2);
    let cert = check_integrable(&LoopModule::rect(2, 2, a), (-1, 3));
    assert!(cert.pass);
    assert_eq!(cert.details["nilpotency-bound"], 3);
}

#[test]
fn reflection_orbit_of_the_top_rectangle_is_rows_constant() {
    let a = param_a();
    let m = LoopModule::rect(2, 2, a);
    let cert = check_extremal(&m, &m.generator(), (0, 2), 2);
    assert!(cert.pass, "witnesses: {:?}", cert.witnesses);
    let mut expected: Vec<String> = Vec::new();
    for x in 0..=3i64 {
        for y in (x + 1)..=3 {
            let t = RectTableau::new(vec![vec![x, x], vec![y, y]]).unwrap();
            expected.push(BasisVector::Rect(t, a).text());
        }
    }
    expected.sort();
    let got: Vec<String> = cert.details["orbit"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn reflection_orbit_of_a_row_vacuum_passes() {
    let a = param_a();
    let m = LoopModule::efl(2, a);
    let cert = check_extremal(&m, &m.generator(), (-1, 3), 3);
    assert!(cert.pass, "witnesses: {:?}", cert.witnesses);
}

#[test]
fn connectivity_holds_generically_and_splits_at_the_degeneration() {
    let a = param_a();
    let cert = check_connected(&LoopModule::efl(2, a), (0, 3));
    assert!(cert.pass);
    assert_eq!(cert.details["components"], 1);
    // Ratio q^{-2} = q^{-2 ell} for two single-box rows: the strict pairs
    // span a submodule and the graph splits in two.
    for d in [-2i64, 2] {
        let m = LoopModule::fuse(
            LoopModule::efl(1, a),
            LoopModule::efl(1, a.shift(d)),
        );
        let cert = check_connected(&m, (0, 2));
        assert!(!cert.pass);
        assert_eq!(cert.details["components"], 2);
        let mut sizes: Vec<u64> = cert.details["sizes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .collect();
        sizes.sort();
        assert_eq!(sizes, vec![6, 10]);
    }
}

#[test]
fn folded_chain_passes_with_only_frontier_terms_flagged() {
    let a = param_a();
    // Entries -4..5 touch nodes -5..5; checking the full span exposes the
    // truncation cuts at both ends, which must be excused, not failed.
    let chi = qchar_row(1, a, -4, 5);
    for n in [None, Some(2), Some(3)] {
        let cert = check_folded(&chi, n, (-5, 5));
        assert!(cert.pass, "n={n:?} witnesses: {:?}", cert.witnesses);
        assert!(!cert.details["frontier"].as_array().unwrap().is_empty());
    }
}

#[test]
fn folded_detects_an_interior_gap() {
    let a = param_a();
    let mut chi = QCharacter::new(Domain::Aff);
    for e in [0i64, 2, 3] {
        chi.add_term(box_mono(e, a.shift(0)), 1);
    }
    let cert = check_folded(&chi, None, (0, 2));
    assert!(!cert.pass);
    assert!(!cert.witnesses.is_empty());
}

#[test]
fn two_construction_agrees_with_the_row_module() {
    for l in [1i64, 2] {
        let cert = check_two_construction(l, param_a(), (-1, 2));
        assert!(cert.pass, "l={l} witnesses: {:?}", cert.witnesses);
        assert!(cert.details["actions"].as_u64().unwrap() > 0);
    }
}

#[test]
fn crystal_iso_intertwines_the_operators() {
    for l in [1i64, 2] {
        let cert = check_crystal_iso(l, (-2, 3));
        assert!(cert.pass, "l={l} witnesses: {:?}", cert.witnesses);
        assert!(cert.details["pairs"].as_u64().unwrap() > 0);
    }
}

#[test]
fn column_iso_certificate_passes() {
    for k in [2i64, 3] {
        let cert = check_column_iso(k, param_a(), (-1, 3));
        assert!(cert.pass, "k={k} witnesses: {:?}", cert.witnesses);
    }
}

#[test]
fn fusion_pole_scan_matches_the_closed_form() {
    let cert = check_fusion_poles(2, -6, 6);
    assert!(cert.pass, "witnesses: {:?}", cert.witnesses);
    let undefined: Vec<i64> = cert.details["undefined"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_i64().unwrap())
        .collect();
    assert_eq!(undefined, vec![-2, 0, 2]);
}

#[test]
fn certificates_serialize_with_stable_fields() {
    let cert = check_fusion_poles(1, -2, 2);
    let j = cert.to_json();
    for key in ["name", "params", "pass", "details", "witnesses"] {
        assert!(j.get(key).is_some());
    }
    let again = check_fusion_poles(1, -2, 2).to_json();
    assert_eq!(j, again);
}
