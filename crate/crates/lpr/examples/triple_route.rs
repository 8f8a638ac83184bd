//! Recover full trajectories along three independent routes — the
//! generalized mechanical connection, the vertical-lift connection, and the
//! direct full-space integrator — and print their pairwise disagreement.
//!
//! ```bash
//! cargo run --release --example triple_route [scenario]
//! ```

use lpr::reconstruction::{direct_integrate, reconstruct_route, ReconstructionMode};
use lpr::scenarios;

fn main() -> lpr::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "affine".into());
    let sys = scenarios::build(&id, &Default::default())?;
    let ic = sys.default_initial_state()?;
    let (t_end, dt) = (1.0, 1e-3);

    println!("scenario `{id}`, t in [0, {t_end}], dt = {dt}");
    let mech = reconstruct_route(&sys, &ic, t_end, dt, ReconstructionMode::Mech)?;
    let principal = reconstruct_route(&sys, &ic, t_end, dt, ReconstructionMode::Principal)?;
    let direct = direct_integrate(&sys, &ic, t_end, dt)?;

    println!("pairwise max error over all coordinates and samples:");
    println!(
        "  mech      vs principal: {:.3e}",
        mech.max_distance(&principal)?
    );
    println!(
        "  mech      vs direct:    {:.3e}",
        mech.max_distance(&direct)?
    );
    println!(
        "  principal vs direct:    {:.3e}",
        principal.max_distance(&direct)?
    );

    let end = direct.final_state();
    println!("\nfinal state (direct route):");
    if !end.x.is_empty() {
        println!("  x = {:?}", end.x.as_slice());
        println!("  v = {:?}", end.v.as_slice());
    }
    println!("  w = {:?}", end.w.as_slice());
    println!("  g =\n{}", end.g.matrix());
    Ok(())
}
