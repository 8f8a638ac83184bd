//! The two horizontal lifts side by side: the generalized mechanical
//! connection moves the lift with the base motion (`ϑ(ḣ) = (b − γ)·v`),
//! while the vertical-lift connection keeps it still for a trivial `γ`.
//! Their reconstruction curves differ, but the composed full trajectories
//! agree.
//!
//! ```bash
//! cargo run --release --example horizontal_lifts
//! ```

use lpr::dynamics::integrate_reduced;
use lpr::reconstruction::{
    compose_full, horizontal_lift_mech, horizontal_lift_principal, reconstruct, ReconstructionMode,
    RouteTag,
};
use lpr::scenarios::{affine_coords, affine_scenario};

fn main() -> lpr::Result<()> {
    let q = 2.0;
    let sys = affine_scenario(q)?;
    let ic = sys.default_initial_state()?;
    let rt = integrate_reduced(&sys, &ic.reduced(), 1.0, 1e-3)?;

    let h_mech = horizontal_lift_mech(&sys, &rt, &ic.g)?;
    let h_prin = horizontal_lift_principal(&sys, &rt, &ic.g)?;
    let g_mech = reconstruct(&sys, &rt, &h_mech, ReconstructionMode::Mech)?;
    let g_prin = reconstruct(&sys, &rt, &h_prin, ReconstructionMode::Principal)?;

    println!("affine worked example, q = {q}; printed solutions:");
    println!("  mech:      theta_h = -q x(t) + q x0 + theta0,  theta_1 = -t²/2 + (q ẋ0 + θ̇0) t");
    println!("  principal: theta_h = theta0,                   theta_1 = t²/(2(q²-1)) + θ̇0 t\n");

    println!(
        "{:>5} {:>13} {:>13} {:>13} {:>13}",
        "t", "theta_h mech", "theta_1 mech", "theta_h prin", "theta_1 prin"
    );
    for (i, &t) in rt.times.iter().enumerate() {
        if i % 250 != 0 {
            continue;
        }
        let (thm, _) = affine_coords(&h_mech.nodes[i]);
        let (t1m, _) = affine_coords(&g_mech.nodes[i]);
        let (thp, _) = affine_coords(&h_prin.nodes[i]);
        let (t1p, _) = affine_coords(&g_prin.nodes[i]);
        println!("{t:>5.2} {thm:>13.8} {t1m:>13.8} {thp:>13.8} {t1p:>13.8}");
    }

    let full_mech = compose_full(&rt, &g_mech, &h_mech, RouteTag::MechConnection)?;
    let full_prin = compose_full(&rt, &g_prin, &h_prin, RouteTag::PrincipalConnection)?;
    println!(
        "\ncomposed trajectories agree to {:.3e}",
        full_mech.max_distance(&full_prin)?
    );
    Ok(())
}
