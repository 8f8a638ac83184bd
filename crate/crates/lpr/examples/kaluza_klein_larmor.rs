//! Charged particle in a uniform magnetic field, formulated as geodesic flow
//! of the Kaluza-Klein metric: the reduced equations are the Lorentz force,
//! the charge is the conserved Abelian momentum, and the orbit is a Larmor
//! circle with radius |v⊥|/(wB) and period 2π/(wB).
//!
//! ```bash
//! cargo run --release --example kaluza_klein_larmor
//! ```

use std::collections::BTreeMap;

use lpr::dynamics::{integrate_reduced, momentum};
use lpr::scenarios::kaluza_klein_uniform_scenario;

fn main() -> lpr::Result<()> {
    let b_field = 2.0;
    let sys = kaluza_klein_uniform_scenario(b_field)?;
    let mut ics = BTreeMap::new();
    ics.insert("v3".to_string(), 0.0);
    let ic = sys.initial_state(&ics)?;
    let s0 = ic.reduced();

    let omega = s0.w[0] * b_field;
    let period = 2.0 * std::f64::consts::PI / omega;
    let radius = s0.v.norm() / omega;
    println!(
        "B = {b_field}, charge w = {}, |v| = {}",
        s0.w[0],
        s0.v.norm()
    );
    println!("expected Larmor radius {radius:.6}, period {period:.6}\n");

    let rt = integrate_reduced(&sys, &s0, period, 1e-3)?;
    let (mut min_x, mut max_x) = (f64::MAX, f64::MIN);
    let mut p_drift = 0.0f64;
    let p0 = momentum(&sys, &s0)?;
    for s in &rt.states {
        min_x = min_x.min(s.x[0]);
        max_x = max_x.max(s.x[0]);
        p_drift = p_drift.max((momentum(&sys, s)? - &p0).norm());
    }
    println!(
        "orbit diameter:       {:.8} (2r = {:.8})",
        max_x - min_x,
        2.0 * radius
    );
    let closure = (rt.final_state().to_vector() - s0.to_vector()).amax();
    println!("closure after period: {closure:.3e}");
    println!("charge drift:         {p_drift:.3e} (momentum is grid-exact)");
    Ok(())
}
