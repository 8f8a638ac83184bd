//! The generalized mechanical connection from the block Hessian: solve
//! `ĝ_ab b^b_i = −ĝ_ai`, change basis through the adjoint matrix, and verify
//! the worked example's printed matrices and determinant.
//!
//! ```bash
//! cargo run --release --example mechanical_connection
//! ```

use lpr::dynamics::ReducedState;
use lpr::lagrangian::{hessian_blocks, mech_connection_coeffs, tilde_basis_hessian};
use lpr::lie_core::adjoint_matrix;
use lpr::scenarios::{affine_element, affine_scenario};
use nalgebra::DVector;

fn main() -> lpr::Result<()> {
    let q = 2.0;
    let sys = affine_scenario(q)?;
    let (theta, phi, phidot) = (0.4f64, -1.1, 1.7);
    let s = ReducedState::new(
        DVector::from_vec(vec![0.0]),
        DVector::from_vec(vec![0.9]),
        DVector::from_vec(vec![0.3, (-theta).exp() * phidot]),
    );

    let blocks = hessian_blocks(&sys.lagrangian, &s)?;
    println!("invariant-basis Hessian blocks at the sample state:");
    println!("g_ww =\n{}", blocks.g_ww);
    println!("g_wv =\n{}", blocks.g_wv);
    println!("g_vv =\n{}", blocks.g_vv);

    let coeffs = mech_connection_coeffs(&blocks)?;
    println!(
        "mechanical connection b = {:?}  (printed: (-q, 0))",
        coeffs.b.as_slice()
    );

    let g = affine_element(&sys.rep, theta, phi)?;
    let a = adjoint_matrix(&sys.rep, &sys.alg, &g)?;
    println!("adjoint matrix A(g) =\n{a}");
    let big_b = &a * &coeffs.b;
    println!(
        "tilde-basis B = A*b = {:?}  (printed: (-q, q*phi) = ({}, {}))",
        big_b.as_slice(),
        -q,
        q * phi
    );

    let tilde = tilde_basis_hessian(&blocks, &a)?;
    println!("tilde-basis Hessian =\n{tilde}");
    println!(
        "det = {:.10}  vs (q^2 - 1)/phidot^2 = {:.10}",
        tilde.determinant(),
        (q * q - 1.0) / (phidot * phidot)
    );
    Ok(())
}
