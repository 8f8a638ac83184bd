//! Release gate: every acceptance criterion at its pinned tolerance, one
//! pass/fail line per check.

use lpr::acceptance::{self, CriterionResult};

fn assert_all(results: &[CriterionResult]) {
    for r in results {
        println!("{}", r.line());
    }
    let failures: Vec<&CriterionResult> = results.iter().filter(|r| !r.passed).collect();
    assert!(
        failures.is_empty(),
        "{} criterion check(s) failed:\n{}",
        failures.len(),
        failures
            .iter()
            .map(|r| r.line())
            .collect::<Vec<_>>()
            .join("\n")
    );
}

#[test]
fn criterion_1_affine_closed_form_reproduction() {
    assert_all(&acceptance::criterion_1(1.0).unwrap());
}

#[test]
fn criterion_2_triple_route_agreement_and_order() {
    assert_all(&acceptance::criterion_2(1.0).unwrap());
}

#[test]
fn criterion_3_reference_value_spot_checks() {
    assert_all(&acceptance::criterion_3(1.0).unwrap());
}

#[test]
fn criterion_4_conservation_suite() {
    assert_all(&acceptance::criterion_4(1.0).unwrap());
}

#[test]
fn criterion_5_structural_property_suite() {
    assert_all(&acceptance::criterion_5(1.0).unwrap());
}

#[test]
fn criterion_6_abelian_routh_equivalence() {
    assert_all(&acceptance::criterion_6(1.0).unwrap());
}
