//! Integrate the affine worked example and compare against its closed-form
//! solution.
//!
//! ```bash
//! cargo run --release --example affine_closed_form
//! ```

use lpr::reconstruction::direct_integrate;
use lpr::scenarios::{affine_coords, affine_scenario};

fn main() -> lpr::Result<()> {
    let q = 2.0;
    let sys = affine_scenario(q)?;
    let ic = sys.default_initial_state()?;

    println!("affine scenario, q = {q}, worked-example initial data");
    println!("closed forms: x(t) = -qt²/(2(q²-1)) + t, θ(t) = t²/(2(q²-1)), φ(t) = t + 1\n");

    let full = direct_integrate(&sys, &ic, 1.0, 1e-3)?;
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "t", "x", "theta", "phi", "max err"
    );
    let mut worst = 0.0f64;
    for (i, &t) in full.times.iter().enumerate() {
        let cf = sys.closed_form(&ic, t)?;
        let (theta, phi) = affine_coords(&full.states[i].g);
        let (theta_cf, phi_cf) = affine_coords(&cf.g);
        let err = (full.states[i].x[0] - cf.x[0])
            .abs()
            .max((theta - theta_cf).abs())
            .max((phi - phi_cf).abs());
        worst = worst.max(err);
        if i % 200 == 0 || i == full.times.len() - 1 {
            println!(
                "{t:>6.3} {:>12.8} {theta:>12.8} {phi:>12.8} {err:>12.3e}",
                full.states[i].x[0]
            );
        }
    }
    println!("\nmax deviation from closed form over [0,1]: {worst:.3e}");
    println!("endpoint targets: x(1) = 2/3, theta(1) = 1/6, phi(1) = 2");
    Ok(())
}
