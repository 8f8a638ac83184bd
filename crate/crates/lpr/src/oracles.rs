//! Independent cross-checks used by the verification suite: a brute-force
//! vector-field bracket oracle for the curvature formula, residual plug-back
//! for the assembled reduced equations, derivative-engine comparisons, and
//! closed-form consistency checks. None of these reuse the code path they
//! check.

use nalgebra::{DMatrix, DVector};

use crate::bundle::{curvature, upsilon, BundleChart};
use crate::dynamics::{lp_rhs, ReducedState};
use crate::error::Result;
use crate::lagrangian::{gradient, hessian_blocks, mixed_blocks};
use crate::lie_core::{GroupElement, GroupRep, LieAlgebraSpec};
use crate::numeric::least_squares;
use crate::reconstruction::{direct_group_rhs, FullState};
use crate::scenarios::System;

/// Step used by the ambient finite-difference bracket oracle.
const BRACKET_FD_STEP: f64 = 1e-5;

/// A point of the ambient space `R^m × R^{n×n}` on which the invariant
/// frame fields extend smoothly.
#[derive(Clone)]
struct AmbientPoint {
    x: DVector<f64>,
    m: DMatrix<f64>,
}

/// Value of the horizontal frame field `X_i = ∂/∂x^i − γ^a_i(x)·Ê_a` at an
/// ambient point; the fiber part is `−γ^a_i(x)·M·ρ(E_a)`.
fn frame_field(
    chart: &BundleChart,
    rep: &GroupRep,
    p: &AmbientPoint,
    i: usize,
) -> Result<AmbientPoint> {
    let gamma = chart.gamma(&p.x)?;
    let mut base = DVector::zeros(p.x.len());
    base[i] = 1.0;
    let n = rep.matrix_dim();
    let mut fiber = DMatrix::zeros(n, n);
    for a in 0..rep.algebra_dim() {
        if gamma[(a, i)] != 0.0 {
            fiber -= &p.m * rep.basis_matrix(a) * gamma[(a, i)];
        }
    }
    Ok(AmbientPoint { x: base, m: fiber })
}

fn ambient_add(p: &AmbientPoint, v: &AmbientPoint, scale: f64) -> AmbientPoint {
    AmbientPoint {
        x: &p.x + &v.x * scale,
        m: &p.m + &v.m * scale,
    }
}

/// Commutator `[X_i, X_j]` at `(x, g)` by ambient central differences of the
/// frame fields along each other, expanded in the left-invariant frame
/// `Ê_a(g) = g·ρ(E_a)`.
pub fn fd_bracket_coefficients(
    chart: &BundleChart,
    rep: &GroupRep,
    x: &DVector<f64>,
    g: &GroupElement,
    i: usize,
    j: usize,
) -> Result<DVector<f64>> {
    let p = AmbientPoint {
        x: x.clone(),
        m: g.matrix().clone(),
    };
    let xi = frame_field(chart, rep, &p, i)?;
    let xj = frame_field(chart, rep, &p, j)?;
    let delta = BRACKET_FD_STEP;

    // D_{X_i} X_j − D_{X_j} X_i, each directional derivative by central FD.
    let deriv = |field: usize, along: &AmbientPoint| -> Result<AmbientPoint> {
        let plus = frame_field(chart, rep, &ambient_add(&p, along, delta), field)?;
        let minus = frame_field(chart, rep, &ambient_add(&p, along, -delta), field)?;
        Ok(AmbientPoint {
            x: (&plus.x - &minus.x) / (2.0 * delta),
            m: (&plus.m - &minus.m) / (2.0 * delta),
        })
    };
    let dji = deriv(j, &xi)?;
    let dij = deriv(i, &xj)?;
    let fiber = &dji.m - &dij.m;

    // Expand g⁻¹·fiber in ρ(E_a) by least squares (FD noise precludes the
    // strict residual gate used for exact expansions).
    let body = g.inverse()?.matrix() * fiber;
    let n2 = rep.matrix_dim() * rep.matrix_dim();
    let k = rep.algebra_dim();
    let mut basis = DMatrix::zeros(n2, k);
    for a in 0..k {
        for (idx, val) in rep.basis_matrix(a).iter().enumerate() {
            basis[(idx, a)] = *val;
        }
    }
    let rhs = DVector::from_iterator(n2, body.iter().copied());
    let (coeffs, _residual) = least_squares(&basis, &rhs)?;
    Ok(coeffs)
}

/// Worst disagreement between the closed-form curvature and the
/// finite-difference bracket oracle over all index pairs at one point.
pub fn curvature_oracle_error(
    chart: &BundleChart,
    alg: &LieAlgebraSpec,
    rep: &GroupRep,
    x: &DVector<f64>,
    g: &GroupElement,
) -> Result<f64> {
    let k_formula = curvature(chart, alg, x)?;
    let m = chart.base_dim();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let oracle = fd_bracket_coefficients(chart, rep, x, g, i, j)?;
            for a in 0..alg.dim() {
                worst = worst.max((k_formula.get(a, i, j) - oracle[a]).abs());
            }
        }
    }
    Ok(worst)
}

/// Residual of the two reduced equations after plugging the solved
/// accelerations back in, with the time derivatives expanded by the chain
/// rule. This checks the linear solve and assembly consistency.
pub fn lp_plugback_residual(sys: &System, s: &ReducedState) -> Result<f64> {
    let rhs = lp_rhs(sys, s)?;
    let grad = gradient(&sys.lagrangian, s)?;
    let blocks = hessian_blocks(&sys.lagrangian, s)?;
    let mixed = mixed_blocks(&sys.lagrangian, s)?;
    let ups = upsilon(&sys.chart, &sys.alg, &s.x)?;
    let curv = curvature(&sys.chart, &sys.alg, &s.x)?;
    let p = &grad.dw;
    let m = s.base_dim();
    let k = s.fiber_dim();

    let mut worst = 0.0f64;
    for i in 0..m {
        // d/dt(∂l/∂v^i) − ∂l/∂x^i + (K^a_{ij}v^j + Υ^a_{ib}w^b) p_a = 0
        let mut acc = -grad.dx[i];
        for j in 0..m {
            acc += mixed.xv[(i, j)] * s.v[j] + blocks.g_vv[(i, j)] * rhs.dv[j];
        }
        for a in 0..k {
            acc += blocks.g_wv[(a, i)] * rhs.dw[a];
            let mut force = 0.0;
            for j in 0..m {
                force += curv.get(a, i, j) * s.v[j];
            }
            for b in 0..k {
                force += ups.get(a, i, b) * s.w[b];
            }
            acc += force * p[a];
        }
        worst = worst.max(acc.abs());
    }
    for a in 0..k {
        // d/dt(∂l/∂w^a) − (Υ^b_{ia}v^i − C^b_{ac}w^c) p_b = 0
        let mut acc = 0.0;
        for j in 0..m {
            acc += mixed.xw[(a, j)] * s.v[j] + blocks.g_wv[(a, j)] * rhs.dv[j];
        }
        for b in 0..k {
            acc += blocks.g_ww[(a, b)] * rhs.dw[b];
            let mut force = 0.0;
            for i in 0..m {
                force += ups.get(b, i, a) * s.v[i];
            }
            for c in 0..k {
                force -= sys.alg.structure_constant(b, a, c) * s.w[c];
            }
            acc -= force * p[b];
        }
        worst = worst.max(acc.abs());
    }
    Ok(worst)
}

/// Residual of a registered closed-form solution against the assembled ODEs
/// at one time: 4th-order finite differences of the closed form compared to
/// the reduced right-hand side and the left-trivialized group velocity.
pub fn closed_form_ode_residual(sys: &System, ic: &FullState, t: f64) -> Result<f64> {
    let delta = 1e-3;
    let at = |tau: f64| sys.closed_form(ic, tau);
    let sm2 = at(t - 2.0 * delta)?;
    let sm1 = at(t - delta)?;
    let s0 = at(t)?;
    let sp1 = at(t + delta)?;
    let sp2 = at(t + 2.0 * delta)?;

    let fd_vec = |f: &dyn Fn(&FullState) -> DVector<f64>| -> DVector<f64> {
        (f(&sm2) - f(&sm1) * 8.0 + f(&sp1) * 8.0 - f(&sp2)) / (12.0 * delta)
    };
    let rhs = lp_rhs(sys, &s0.reduced())?;
    let mut worst = (fd_vec(&|s| s.x.clone()) - &rhs.dx).amax();
    worst = worst.max((fd_vec(&|s| s.v.clone()) - &rhs.dv).amax());
    worst = worst.max((fd_vec(&|s| s.w.clone()) - &rhs.dw).amax());

    // Group part: ϑ(ġ) extracted from the matrix derivative must match
    // w − γ(x)·v.
    let n = sys.rep.matrix_dim();
    let mut gdot = DMatrix::zeros(n, n);
    for (c, s) in [(1.0, &sm2), (-8.0, &sm1), (8.0, &sp1), (-1.0, &sp2)] {
        gdot += s.g.matrix() * c;
    }
    gdot /= 12.0 * delta;
    let body = crate::lie_core::maurer_cartan_coords(&sys.rep, &s0.g, &gdot)?;
    let lambda = direct_group_rhs(sys, &s0)?;
    worst = worst.max((body - lambda).amax());
    Ok(worst)
}
