//! Abelian Routh reduction: fix a momentum level, eliminate the fiber
//! velocities through the Routhian, and check that the resulting
//! second-order system on the base reproduces the projection of the full
//! reduced flow.
//!
//! ```bash
//! cargo run --release --example routh_reduction
//! ```

use lpr::dynamics::{integrate_reduced, momentum, routh_reduce};
use lpr::scenarios::kaluza_klein_uniform_scenario;

fn main() -> lpr::Result<()> {
    let sys = kaluza_klein_uniform_scenario(1.0)?;
    let s0 = sys.default_initial_state()?.reduced();
    let mu = momentum(&sys, &s0)?;
    println!("momentum level mu = {:?}", mu.as_slice());

    let routh = routh_reduce(&sys, mu.clone())?;
    println!(
        "Routhian at the initial point: R = {:.8}",
        routh.routhian(&s0.x, &s0.v)?
    );

    let lp = integrate_reduced(&sys, &s0, 1.0, 1e-3)?;
    let rr = routh.integrate(&s0.x, &s0.v, 1.0, 1e-3)?;
    let mut worst = 0.0f64;
    for i in 0..lp.times.len() {
        worst = worst.max((&lp.states[i].x - &rr.xs[i]).amax());
        worst = worst.max((&lp.states[i].v - &rr.vs[i]).amax());
    }
    println!("max |Routh - LP projection| over [0,1]: {worst:.3e}");

    // The affine fiber group is non-Abelian, so Routh reduction refuses it.
    let affine = lpr::scenarios::affine_scenario(2.0)?;
    match routh_reduce(&affine, nalgebra::DVector::zeros(2)) {
        Err(e) => println!("affine scenario correctly rejected: {e}"),
        Ok(_) => println!("unexpected: affine scenario accepted"),
    }
    Ok(())
}
