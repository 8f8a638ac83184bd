//! The reduced engine against the brute-force coordinate Euler-Lagrange
//! oracle: both integrate the same physics through disjoint code paths, so
//! trajectory agreement pins the sign conventions of the reduced equations.

mod common;

use common::{state_distance, ElOracle, GroupChart};
use lpr::dynamics::integrate_reduced;
use lpr::scenarios;
use nalgebra::DVector;

/// The oracle's nested finite differences carry ~1e-7 acceleration noise,
/// which integrates to ~1e-6 over the run; a sign error in any forcing term
/// would instead diverge at the 1e-1 level.
const ORACLE_TOL: f64 = 1e-5;

fn compare_with_oracle(
    sys: &lpr::scenarios::System,
    chart: GroupChart,
    q0_group: DVector<f64>,
    t_end: f64,
    dt: f64,
) -> f64 {
    let s0 = sys.default_initial_state().unwrap().reduced();
    let oracle = ElOracle::new(sys, chart);

    let m = sys.base_dim();
    let mut q0 = DVector::zeros(m + q0_group.len());
    q0.rows_mut(0, m).copy_from(&s0.x);
    q0.rows_mut(m, q0_group.len()).copy_from(&q0_group);
    let qdot0 = oracle.chart_velocity(&q0, &s0);

    // The initial chart velocity must reproduce the quasi-velocities.
    let roundtrip = oracle.quasi_velocities(&q0, &qdot0);
    assert!(
        state_distance(&roundtrip, &s0) < 1e-9,
        "quasi-velocity roundtrip failed: {:.3e}",
        state_distance(&roundtrip, &s0)
    );

    let reference = oracle.integrate(&q0, &qdot0, t_end, dt);
    let reduced = integrate_reduced(sys, &s0, t_end, dt).unwrap();
    assert_eq!(reference.len(), reduced.states.len());
    reference
        .iter()
        .zip(reduced.states.iter())
        .map(|(a, b)| state_distance(a, b))
        .fold(0.0, f64::max)
}

#[test]
fn affine_reduced_flow_matches_coordinate_euler_lagrange() {
    let sys = scenarios::affine_scenario(2.0).unwrap();
    // Chart origin (θ₀, φ₀) = (0, 1) matches the default initial state.
    let worst = compare_with_oracle(
        &sys,
        GroupChart::affine(),
        DVector::from_vec(vec![0.0, 1.0]),
        0.5,
        1e-3,
    );
    assert!(worst < ORACLE_TOL, "affine flow deviates by {worst:.3e}");
}

#[test]
fn kaluza_klein_reduced_flow_matches_coordinate_euler_lagrange() {
    let sys = scenarios::kaluza_klein_uniform_scenario(1.0).unwrap();
    let worst = compare_with_oracle(
        &sys,
        GroupChart::circle(),
        DVector::from_vec(vec![0.0]),
        0.5,
        1e-3,
    );
    assert!(worst < ORACLE_TOL, "KK flow deviates by {worst:.3e}");
}

#[test]
fn rigid_body_reduced_flow_matches_coordinate_euler_lagrange() {
    let sys = scenarios::rigid_body_scenario([1.0, 2.0, 3.0]).unwrap();
    let worst = compare_with_oracle(&sys, GroupChart::so3_exp(), DVector::zeros(3), 0.5, 1e-3);
    assert!(
        worst < ORACLE_TOL,
        "rigid-body flow deviates by {worst:.3e}"
    );
}

#[test]
fn wong_reduced_flow_matches_coordinate_euler_lagrange() {
    // The only scenario with both curvature and Υ forcing; this pins the
    // remaining sign freedom of the reduced equations.
    let sys = scenarios::wong_demo_scenario().unwrap();
    let worst = compare_with_oracle(&sys, GroupChart::so3_exp(), DVector::zeros(3), 0.5, 1e-3);
    assert!(worst < ORACLE_TOL, "Wong flow deviates by {worst:.3e}");
}
