//! Wong's equations as a property of the reduced flow: on a curved base with
//! an SO(3) fiber, the assembled equations are geodesics with curvature
//! coupling plus parallel transport of the internal charge, and the charge
//! norm is conserved.
//!
//! ```bash
//! cargo run --release --example wong_equations
//! ```

use lpr::bundle::{curvature, upsilon};
use lpr::dynamics::{integrate_reduced, lp_rhs};
use lpr::scenarios::wong_demo_scenario;

fn main() -> lpr::Result<()> {
    let sys = wong_demo_scenario()?;
    let s0 = sys.default_initial_state()?.reduced();

    println!("Wong demo: base metric diag(1 + x2²/2, 1 + 0.3 x1²), SO(3) fiber\n");
    let k = curvature(&sys.chart, &sys.alg, &s0.x)?;
    let u = upsilon(&sys.chart, &sys.alg, &s0.x)?;
    println!(
        "curvature components K^a_12 at x(0): {:?}",
        (0..3).map(|a| k.get(a, 0, 1)).collect::<Vec<_>>()
    );
    println!("largest Upsilon component at x(0):   {:.4}", u.max_abs());

    let rhs = lp_rhs(&sys, &s0)?;
    println!("\ninitial accelerations:");
    println!("  dv = {:?}", rhs.dv.as_slice());
    println!("  dw = {:?} (charge transport)", rhs.dw.as_slice());

    let rt = integrate_reduced(&sys, &s0, 1.0, 1e-3)?;
    let q0 = s0.w.norm_squared();
    let drift = rt
        .states
        .iter()
        .map(|s| (s.w.norm_squared() - q0).abs())
        .fold(0.0f64, f64::max);
    println!("\ncharge norm h(w, w) drift over [0,1]: {drift:.3e}");
    println!(
        "final charge direction: {:?}",
        rt.final_state().w.as_slice()
    );
    Ok(())
}
