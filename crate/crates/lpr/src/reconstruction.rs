//! Horizontal lifts of reduced trajectories, the reconstruction equation on
//! the group for the generalized mechanical connection and for the vertical
//! lift of the principal connection, and a direct full-space integrator used
//! as the cross-check oracle.
//!
//! All group ODEs are written through the left Maurer-Cartan form:
//! `ϑ(ġ)` are the coordinates of `g⁻¹ġ` in the left-invariant frame.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{
    integrate_reduced, lp_rhs, rk4_sweep, time_grid, ReducedState, ReducedTrajectory,
};
use crate::error::{LprError, Result};
use crate::lagrangian::{hessian_blocks, mech_connection_coeffs};
use crate::lie_core::{
    adjoint_matrix, group_exp, rkmk4_from_samples, rkmk4_joint_theta, step_group_ode, GroupElement,
};
use crate::scenarios::System;

/// A point of the full velocity phase space in the trivialized chart.
#[derive(Debug, Clone)]
pub struct FullState {
    pub x: DVector<f64>,
    pub g: GroupElement,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
}

impl FullState {
    /// Drop the group coordinate.
    pub fn reduced(&self) -> ReducedState {
        ReducedState::new(self.x.clone(), self.v.clone(), self.w.clone())
    }
}

/// Which construction produced a full trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteTag {
    MechConnection,
    PrincipalConnection,
    DirectOracle,
}

impl RouteTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RouteTag::MechConnection => "mech-connection",
            RouteTag::PrincipalConnection => "principal-connection",
            RouteTag::DirectOracle => "direct-oracle",
        }
    }
}

/// Time-sampled curve on the full space.
#[derive(Debug, Clone)]
pub struct FullTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FullState>,
    pub provenance: RouteTag,
}

impl FullTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &FullState {
        self.states.last().expect("trajectory is nonempty")
    }

    /// Largest componentwise distance over all samples and all coordinates
    /// (base, quasi-velocities and group matrix entries).
    pub fn max_distance(&self, other: &FullTrajectory) -> Result<f64> {
        if self.times.len() != other.times.len() {
            return Err(LprError::GridMismatch(format!(
                "{} vs {} samples",
                self.times.len(),
                other.times.len()
            )));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.states.iter().zip(other.states.iter()) {
            worst = worst.max((&a.x - &b.x).amax());
            worst = worst.max((&a.v - &b.v).amax());
            worst = worst.max((&a.w - &b.w).amax());
            worst = worst.max((a.g.matrix() - b.g.matrix()).amax());
        }
        Ok(worst)
    }
}

/// A group-valued curve on the trajectory grid, with midpoint samples so that
/// downstream RK stages can be evaluated without interpolating on the group.
#[derive(Debug, Clone)]
pub struct GroupPath {
    pub times: Vec<f64>,
    pub nodes: Vec<GroupElement>,
    pub midpoints: Option<Vec<GroupElement>>,
}

impl GroupPath {
    fn midpoint(&self, interval: usize) -> Result<&GroupElement> {
        self.midpoints
            .as_ref()
            .map(|m| &m[interval])
            .ok_or_else(|| LprError::GridMismatch("group path has no midpoint samples".into()))
    }
}

/// Left-trivialized group velocity of the full flow:
/// `λ^a = w^a − γ^a_i(x) v^i`, so that `ġ = g·ρ(λ)`.
pub fn direct_group_rhs(sys: &System, s: &FullState) -> Result<DVector<f64>> {
    lambda_direct(sys, &s.reduced())
}

pub(crate) fn lambda_direct(sys: &System, s: &ReducedState) -> Result<DVector<f64>> {
    let gamma = sys.chart.gamma(&s.x)?;
    Ok(&s.w - gamma * &s.v)
}

/// Mechanical-connection coefficients at a reduced state.
fn mech_b(sys: &System, s: &ReducedState) -> Result<DMatrix<f64>> {
    let blocks = hessian_blocks(&sys.lagrangian, s)?;
    Ok(mech_connection_coeffs(&blocks)?.b)
}

fn check_membership(sys: &System, g: &GroupElement, t: f64) -> Result<()> {
    let deviation = sys.rep.deviation(g.matrix());
    if deviation > sys.rep.membership_tol() {
        return Err(LprError::NotInGroup {
            deviation,
            tolerance: sys.rep.membership_tol(),
        }
        .at_time(t));
    }
    Ok(())
}

fn integrate_group_curve<F>(
    sys: &System,
    rt: &ReducedTrajectory,
    h0: &GroupElement,
    mut lambda: F,
) -> Result<GroupPath>
where
    F: FnMut(f64) -> Result<DVector<f64>>,
{
    check_membership(sys, h0, rt.times[0])?;
    let n = rt.times.len();
    let mut nodes = Vec::with_capacity(n);
    let mut midpoints = Vec::with_capacity(n - 1);
    nodes.push(h0.clone());
    for i in 0..n - 1 {
        let t = rt.times[i];
        let dt = rt.times[i + 1] - t;
        let wrap = |e: LprError| e.at_time(t);
        let half = step_group_ode(&sys.rep, &sys.alg, &nodes[i], &mut lambda, t, 0.5 * dt)
            .map_err(wrap)?;
        let next =
            step_group_ode(&sys.rep, &sys.alg, &nodes[i], &mut lambda, t, dt).map_err(wrap)?;
        check_membership(sys, &next, rt.times[i + 1])?;
        midpoints.push(half);
        nodes.push(next);
    }
    Ok(GroupPath {
        times: rt.times.clone(),
        nodes,
        midpoints: Some(midpoints),
    })
}

/// Horizontal lift through `h0` with respect to the generalized mechanical
/// connection: the lift's fiber quasi-velocity must equal `b^a_i v^i`, which
/// in the left-trivialized form reads `ϑ(ḣ)^a = (b^a_i − γ^a_i) v^i`.
pub fn horizontal_lift_mech(
    sys: &System,
    rt: &ReducedTrajectory,
    h0: &GroupElement,
) -> Result<GroupPath> {
    integrate_group_curve(sys, rt, h0, |t| {
        let s = rt.sample(t);
        let b = mech_b(sys, &s)?;
        let gamma = sys.chart.gamma(&s.x)?;
        Ok((b - gamma) * &s.v)
    })
}

/// Horizontal lift through `h0` with respect to the vertical lift of the
/// principal connection: `ϑ(ḣ)^a = −γ^a_i(x) v^i`; constant for trivial `γ`.
pub fn horizontal_lift_principal(
    sys: &System,
    rt: &ReducedTrajectory,
    h0: &GroupElement,
) -> Result<GroupPath> {
    integrate_group_curve(sys, rt, h0, |t| {
        let s = rt.sample(t);
        let gamma = sys.chart.gamma(&s.x)?;
        Ok(-(gamma * &s.v))
    })
}

/// Which connection drives the reconstruction equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructionMode {
    Mech,
    Principal,
}

impl ReconstructionMode {
    pub fn tag(&self) -> RouteTag {
        match self {
            ReconstructionMode::Mech => RouteTag::MechConnection,
            ReconstructionMode::Principal => RouteTag::PrincipalConnection,
        }
    }
}

/// Solve the reconstruction equation with `g(0) = e` along the lift `h`:
/// `ϑ(ġ) = A(h)·(w − b·v)` in mechanical mode (the tilde-basis coefficients
/// are `B = A·b`), or `ϑ(ġ) = A(h)·w` for the vertical-lift connection.
pub fn reconstruct(
    sys: &System,
    rt: &ReducedTrajectory,
    h: &GroupPath,
    mode: ReconstructionMode,
) -> Result<GroupPath> {
    if h.times.len() != rt.times.len() {
        return Err(LprError::GridMismatch(format!(
            "lift has {} samples, trajectory {}",
            h.times.len(),
            rt.times.len()
        )));
    }
    let lambda_at = |hg: &GroupElement, s: &ReducedState| -> Result<DVector<f64>> {
        let a = adjoint_matrix(&sys.rep, &sys.alg, hg)?;
        match mode {
            ReconstructionMode::Mech => {
                let b = mech_b(sys, s)?;
                Ok(a * (&s.w - b * &s.v))
            }
            ReconstructionMode::Principal => Ok(a * &s.w),
        }
    };
    let n = rt.times.len();
    let mut nodes = Vec::with_capacity(n);
    nodes.push(sys.rep.identity());
    for i in 0..n - 1 {
        let t = rt.times[i];
        let dt = rt.times[i + 1] - t;
        let wrap = |e: LprError| e.at_time(t);
        let lam0 = lambda_at(&h.nodes[i], &rt.states[i]).map_err(wrap)?;
        let lam_half = lambda_at(h.midpoint(i)?, &rt.sample(t + 0.5 * dt)).map_err(wrap)?;
        let lam1 = lambda_at(&h.nodes[i + 1], &rt.states[i + 1]).map_err(wrap)?;
        let next = rkmk4_from_samples(&sys.rep, &sys.alg, &nodes[i], dt, &lam0, &lam_half, &lam1)
            .map_err(wrap)?;
        check_membership(sys, &next, rt.times[i + 1])?;
        nodes.push(next);
    }
    Ok(GroupPath {
        times: rt.times.clone(),
        nodes,
        midpoints: None,
    })
}

/// Assemble the full trajectory `v(t) = (x(t), g(t)·h(t), v(t), w(t))`.
pub fn compose_full(
    rt: &ReducedTrajectory,
    g: &GroupPath,
    h: &GroupPath,
    tag: RouteTag,
) -> Result<FullTrajectory> {
    if g.times.len() != rt.times.len() || h.times.len() != rt.times.len() {
        return Err(LprError::GridMismatch(
            "reduced trajectory and group curves must share one grid".into(),
        ));
    }
    for i in 0..rt.times.len() {
        if g.times[i] != rt.times[i] || h.times[i] != rt.times[i] {
            return Err(LprError::GridMismatch(format!(
                "time mismatch at sample {i}"
            )));
        }
    }
    let states = (0..rt.times.len())
        .map(|i| FullState {
            x: rt.states[i].x.clone(),
            g: g.nodes[i].mul(&h.nodes[i]),
            v: rt.states[i].v.clone(),
            w: rt.states[i].w.clone(),
        })
        .collect();
    Ok(FullTrajectory {
        times: rt.times.clone(),
        states,
        provenance: tag,
    })
}

/// Run one connection route end to end: reduced integration, horizontal lift
/// through the initial group point, reconstruction from the identity, and
/// composition.
pub fn reconstruct_route(
    sys: &System,
    s0: &FullState,
    t_end: f64,
    dt: f64,
    mode: ReconstructionMode,
) -> Result<FullTrajectory> {
    let rt = integrate_reduced(sys, &s0.reduced(), t_end, dt)?;
    let h = match mode {
        ReconstructionMode::Mech => horizontal_lift_mech(sys, &rt, &s0.g)?,
        ReconstructionMode::Principal => horizontal_lift_principal(sys, &rt, &s0.g)?,
    };
    let g = reconstruct(sys, &rt, &h, mode)?;
    compose_full(&rt, &g, &h, mode.tag())
}

/// Integrate the full Euler-Lagrange flow without any connection: the reduced
/// equations drive `(x, v, w)` while the group factor follows
/// `ϑ(ġ) = w − γ(x)·v`, advanced jointly so the reduced samples are bitwise
/// those of [`integrate_reduced`].
pub fn direct_integrate(
    sys: &System,
    s0: &FullState,
    t_end: f64,
    dt: f64,
) -> Result<FullTrajectory> {
    check_membership(sys, &s0.g, 0.0)?;
    let times = time_grid(t_end, dt)?;
    let mut states = Vec::with_capacity(times.len());
    states.push(s0.clone());
    for i in 0..times.len() - 1 {
        let t = times[i];
        let step = times[i + 1] - t;
        let wrap = |e: LprError| e.at_time(t);
        let prev = &states[i];
        let reduced = prev.reduced();
        let sweep = rk4_sweep(sys, &reduced, step).map_err(wrap)?;
        let lam1 = lambda_direct(sys, &reduced).map_err(wrap)?;
        let lam2 = lambda_direct(sys, &sweep.s2).map_err(wrap)?;
        let lam3 = lambda_direct(sys, &sweep.s3).map_err(wrap)?;
        let lam4 = lambda_direct(sys, &sweep.s4).map_err(wrap)?;
        let theta =
            rkmk4_joint_theta(&sys.alg, step, [&lam1, &lam2, &lam3, &lam4]).map_err(wrap)?;
        let g_next = prev.g.mul(&group_exp(&sys.rep, &theta));
        check_membership(sys, &g_next, times[i + 1])?;
        states.push(FullState {
            x: sweep.next.x.clone(),
            g: g_next,
            v: sweep.next.v.clone(),
            w: sweep.next.w.clone(),
        });
    }
    Ok(FullTrajectory {
        times,
        states,
        provenance: RouteTag::DirectOracle,
    })
}

/// Diagnostic vertical-part coefficient of the flow in the invariant fiber
/// frame, `Γ^a + Υ^a_{ib} v^i w^b`; along a full solution it satisfies
/// `d/dt (A(g(t)) w(t)) = A(g(t)) · (Γ + Υ v w)`.
pub fn upsilon_corrected_vertical(sys: &System, s: &ReducedState) -> Result<DVector<f64>> {
    let rhs = lp_rhs(sys, s)?;
    let ups = crate::bundle::upsilon(&sys.chart, &sys.alg, &s.x)?;
    let k = s.fiber_dim();
    let m = s.base_dim();
    let mut out = rhs.dw;
    for a in 0..k {
        let mut acc = 0.0;
        for i in 0..m {
            for b in 0..k {
                acc += ups.get(a, i, b) * s.v[i] * s.w[b];
            }
        }
        out[a] += acc;
    }
    Ok(out)
}

/// Coefficient of the vertical part of the flow with respect to the
/// generalized mechanical connection, `A(g)·(w − b·v)`; it vanishes exactly
/// on mechanically horizontal states `w = b·v`.
pub fn vertical_split_coefficient(
    sys: &System,
    g: &GroupElement,
    s: &ReducedState,
) -> Result<DVector<f64>> {
    let a = adjoint_matrix(&sys.rep, &sys.alg, g)?;
    let b = mech_b(sys, s)?;
    Ok(a * (&s.w - b * &s.v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;
    use approx::assert_relative_eq;

    fn affine_default_ic(sys: &System) -> FullState {
        sys.default_initial_state().unwrap()
    }

    #[test]
    fn direct_rhs_is_fiber_velocity_for_trivial_connection() {
        let sys = scenarios::affine_scenario(2.0).unwrap();
        let s0 = affine_default_ic(&sys);
        let lam = direct_group_rhs(&sys, &s0).unwrap();
        assert!((lam - &s0.w).norm() < 1e-15);
    }

    #[test]
    fn kaluza_klein_group_rhs_reproduces_quasi_velocity_constraint() {
        // θ̇ = w − A_i ẋ^i: round-trip the quasi-velocity definition.
        let sys = scenarios::kaluza_klein_uniform_scenario(1.3).unwrap();
        let x = DVector::from_vec(vec![0.4, -0.7, 0.2]);
        let v = DVector::from_vec(vec![0.9, 0.1, -0.5]);
        let w = DVector::from_vec(vec![0.6]);
        let s = FullState {
            x: x.clone(),
            g: sys.rep.identity(),
            v: v.clone(),
            w: w.clone(),
        };
        let lam = direct_group_rhs(&sys, &s).unwrap();
        let a_field = sys.chart.gamma(&x).unwrap();
        let theta_dot = w[0] - (a_field * v)[0];
        assert_relative_eq!(lam[0], theta_dot, epsilon = 1e-14);
    }

    /// Quadratic system with a v–w cross term, used where the affine
    /// scenario's `w₂ > 0` domain would get in the way.
    fn coupled_test_system(c: f64) -> System {
        let lag = crate::lagrangian::ReducedLagrangian::new(
            1,
            2,
            Box::new(move |s: &ReducedState| {
                0.5 * s.v[0] * s.v[0] + 0.5 * s.w.norm_squared() + c * s.v[0] * s.w[0]
            }),
        )
        .with_gradient(Box::new(move |s: &ReducedState| {
            crate::lagrangian::Gradient {
                dx: DVector::zeros(1),
                dv: DVector::from_vec(vec![s.v[0] + c * s.w[0]]),
                dw: DVector::from_vec(vec![s.w[0] + c * s.v[0], s.w[1]]),
            }
        }))
        .with_hessian(Box::new(move |_s: &ReducedState| {
            (
                crate::lagrangian::HessianBlocks {
                    g_ww: DMatrix::identity(2, 2),
                    g_wv: DMatrix::from_row_slice(2, 1, &[c, 0.0]),
                    g_vv: DMatrix::identity(1, 1),
                },
                crate::lagrangian::MixedBlocks {
                    xv: DMatrix::zeros(1, 1),
                    xw: DMatrix::zeros(2, 1),
                },
            )
        }));
        System::builder("coupled-test")
            .algebra(scenarios::affine_algebra())
            .rep(scenarios::affine_rep())
            .chart(crate::bundle::BundleChart::trivial(1, 2))
            .lagrangian(lag)
            .build()
            .unwrap()
    }

    #[test]
    fn frozen_group_when_fiber_velocity_vanishes() {
        // w ≡ 0 with γ = 0 gives λ = 0, so the direct flow never moves the
        // group coordinate (the uncoupled Lagrangian keeps w at zero).
        let sys = coupled_test_system(0.0);
        let g0 = scenarios::affine_element(&sys.rep, 0.2, -0.4).unwrap();
        let s0 = FullState {
            x: DVector::from_vec(vec![0.1]),
            g: g0.clone(),
            v: DVector::from_vec(vec![1.0]),
            w: DVector::zeros(2),
        };
        let full = direct_integrate(&sys, &s0, 0.3, 1e-2).unwrap();
        for st in &full.states {
            assert!((st.g.matrix() - g0.matrix()).norm() < 1e-14);
            assert!(st.w.norm() < 1e-15);
        }
    }

    #[test]
    fn mech_lift_matches_printed_affine_expressions() {
        // θ_h(t) = −q·x(t) + q·x₀ + θ₀ and φ_h(t) = φ₀.
        let q = 2.0;
        let sys = scenarios::affine_scenario(q).unwrap();
        let s0 = affine_default_ic(&sys);
        let rt = integrate_reduced(&sys, &s0.reduced(), 1.0, 1e-3).unwrap();
        let h = horizontal_lift_mech(&sys, &rt, &s0.g).unwrap();
        let (theta0, phi0) = scenarios::affine_coords(&s0.g);
        let x0 = s0.x[0];
        for (i, node) in h.nodes.iter().enumerate() {
            let (th, ph) = scenarios::affine_coords(node);
            let x_t = rt.states[i].x[0];
            assert_relative_eq!(th, -q * x_t + q * x0 + theta0, epsilon = 1e-8);
            assert_relative_eq!(ph, phi0, epsilon = 1e-10);
        }
    }

    #[test]
    fn principal_lift_is_constant_for_trivial_connection() {
        let sys = scenarios::affine_scenario(2.0).unwrap();
        let s0 = affine_default_ic(&sys);
        let rt = integrate_reduced(&sys, &s0.reduced(), 0.5, 1e-2).unwrap();
        let h = horizontal_lift_principal(&sys, &rt, &s0.g).unwrap();
        for node in &h.nodes {
            assert!((node.matrix() - s0.g.matrix()).norm() < 1e-13);
        }
    }

    #[test]
    fn constant_lift_when_base_velocity_vanishes() {
        // v ≡ 0 keeps both lifts at h0 (rigid body has m = 0).
        let sys = scenarios::rigid_body_scenario([1.0, 2.0, 3.0]).unwrap();
        let s0 = FullState {
            x: DVector::zeros(0),
            g: sys.rep.identity(),
            v: DVector::zeros(0),
            w: DVector::from_vec(vec![0.3, 1.0, 0.2]),
        };
        let rt = integrate_reduced(&sys, &s0.reduced(), 0.5, 1e-2).unwrap();
        let h = horizontal_lift_mech(&sys, &rt, &s0.g).unwrap();
        for node in &h.nodes {
            assert!((node.matrix() - s0.g.matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn reconstruction_intermediates_match_printed_solutions() {
        // Mech mode: θ₁(t) = −½t² + (qẋ₀ + θ̇₀)t.
        // Principal mode: θ₁(t) = ½t²/(q²−1) + θ̇₀t.
        let q = 2.0;
        let sys = scenarios::affine_scenario(q).unwrap();
        let s0 = affine_default_ic(&sys);
        let rt = integrate_reduced(&sys, &s0.reduced(), 1.0, 1e-3).unwrap();

        let h_mech = horizontal_lift_mech(&sys, &rt, &s0.g).unwrap();
        let g_mech = reconstruct(&sys, &rt, &h_mech, ReconstructionMode::Mech).unwrap();
        let h_pr = horizontal_lift_principal(&sys, &rt, &s0.g).unwrap();
        let g_pr = reconstruct(&sys, &rt, &h_pr, ReconstructionMode::Principal).unwrap();

        let (dx0, dtheta0) = (s0.v[0], s0.w[0]);
        for (i, &t) in rt.times.iter().enumerate() {
            let (th_m, _) = scenarios::affine_coords(&g_mech.nodes[i]);
            assert_relative_eq!(th_m, -0.5 * t * t + (q * dx0 + dtheta0) * t, epsilon = 1e-7);
            let (th_p, _) = scenarios::affine_coords(&g_pr.nodes[i]);
            assert_relative_eq!(
                th_p,
                0.5 * t * t / (q * q - 1.0) + dtheta0 * t,
                epsilon = 1e-7
            );
        }
    }

    #[test]
    fn identity_reconstruction_for_static_fiber() {
        // w ≡ 0 and v ≡ 0 keeps g ≡ e in both modes.
        let sys = scenarios::rigid_body_scenario([1.0, 2.0, 3.0]).unwrap();
        let s0 = FullState {
            x: DVector::zeros(0),
            g: sys.rep.identity(),
            v: DVector::zeros(0),
            w: DVector::zeros(3),
        };
        let rt = integrate_reduced(&sys, &s0.reduced(), 0.4, 1e-2).unwrap();
        let h = horizontal_lift_principal(&sys, &rt, &s0.g).unwrap();
        let g = reconstruct(&sys, &rt, &h, ReconstructionMode::Principal).unwrap();
        for node in &g.nodes {
            assert!((node.matrix() - sys.rep.identity().matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn composed_routes_recover_affine_closed_forms() {
        let q = 2.0;
        let sys = scenarios::affine_scenario(q).unwrap();
        let s0 = affine_default_ic(&sys);
        for mode in [ReconstructionMode::Mech, ReconstructionMode::Principal] {
            let full = reconstruct_route(&sys, &s0, 1.0, 1e-3, mode).unwrap();
            for (i, &t) in full.times.iter().enumerate() {
                let expected = sys.closed_form(&s0, t).unwrap();
                let (th, ph) = scenarios::affine_coords(&full.states[i].g);
                let (th_e, ph_e) = scenarios::affine_coords(&expected.g);
                assert_relative_eq!(th, th_e, epsilon = 1e-7);
                assert_relative_eq!(ph, ph_e, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn identity_g_composition_returns_the_lift() {
        let sys = scenarios::affine_scenario(2.0).unwrap();
        let s0 = affine_default_ic(&sys);
        let rt = integrate_reduced(&sys, &s0.reduced(), 0.2, 1e-2).unwrap();
        let h = horizontal_lift_principal(&sys, &rt, &s0.g).unwrap();
        let e_path = GroupPath {
            times: rt.times.clone(),
            nodes: vec![sys.rep.identity(); rt.times.len()],
            midpoints: None,
        };
        let full = compose_full(&rt, &e_path, &h, RouteTag::PrincipalConnection).unwrap();
        for (st, node) in full.states.iter().zip(h.nodes.iter()) {
            assert!((st.g.matrix() - node.matrix()).norm() < 1e-15);
        }
    }

    #[test]
    fn direct_oracle_reproduces_affine_closed_forms() {
        let sys = scenarios::affine_scenario(2.0).unwrap();
        let s0 = affine_default_ic(&sys);
        let full = direct_integrate(&sys, &s0, 1.0, 1e-3).unwrap();
        let mut worst = 0.0f64;
        for (i, &t) in full.times.iter().enumerate() {
            let cf = sys.closed_form(&s0, t).unwrap();
            worst = worst.max((&full.states[i].x - &cf.x).amax());
            worst = worst.max((full.states[i].g.matrix() - cf.g.matrix()).amax());
        }
        assert!(worst < 1e-7, "worst deviation from closed form {worst:.3e}");
    }

    #[test]
    fn direct_projection_matches_reduced_integration_bitwise() {
        let sys = scenarios::affine_scenario(2.0).unwrap();
        let s0 = affine_default_ic(&sys);
        let rt = integrate_reduced(&sys, &s0.reduced(), 0.5, 1e-2).unwrap();
        let full = direct_integrate(&sys, &s0, 0.5, 1e-2).unwrap();
        for (a, b) in rt.states.iter().zip(full.states.iter()) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.v, b.v);
            assert_eq!(a.w, b.w);
        }
    }

    #[test]
    fn left_translation_of_initial_point_translates_the_route() {
        let sys = scenarios::affine_scenario(2.0).unwrap();
        let s0 = affine_default_ic(&sys);
        let g0 = scenarios::affine_element(&sys.rep, 0.3, -0.5).unwrap();
        let mut translated = s0.clone();
        translated.g = g0.mul(&s0.g);
        for mode in [ReconstructionMode::Mech, ReconstructionMode::Principal] {
            let base = reconstruct_route(&sys, &s0, 0.5, 1e-3, mode).unwrap();
            let moved = reconstruct_route(&sys, &translated, 0.5, 1e-3, mode).unwrap();
            let mut worst = 0.0f64;
            for (a, b) in base.states.iter().zip(moved.states.iter()) {
                let lhs = g0.mul(&a.g);
                worst = worst.max((lhs.matrix() - b.g.matrix()).amax());
            }
            assert!(worst < 1e-9, "left translation broke {mode:?}: {worst:.3e}");
        }
    }

    #[test]
    fn vertical_split_vanishes_on_mechanically_horizontal_states() {
        // Synthesize states with w = b·v pointwise; the vertical-part
        // coefficient A(g)·(w − b·v) must vanish identically.
        let sys = coupled_test_system(0.7);
        let g = scenarios::affine_element(&sys.rep, 0.4, 1.2).unwrap();
        for v0 in [-1.3, 0.2, 2.1] {
            let probe = ReducedState::new(
                DVector::from_vec(vec![0.3]),
                DVector::from_vec(vec![v0]),
                DVector::zeros(2),
            );
            let b = mech_b(&sys, &probe).unwrap();
            let s = ReducedState::new(probe.x.clone(), probe.v.clone(), &b * &probe.v);
            let coeff = vertical_split_coefficient(&sys, &g, &s).unwrap();
            assert!(coeff.norm() < 1e-12, "nonzero vertical part {coeff}");
        }
    }

    #[test]
    fn upsilon_corrected_vertical_tracks_tilde_velocity_derivative() {
        // d/dt (A(g(t)) w(t)) = A(g(t)) (Γ + Υ v w) along a direct solution,
        // exercised on the Wong demo where Υ ≠ 0.
        let sys = scenarios::wong_demo_scenario().unwrap();
        let s0 = sys.default_initial_state().unwrap();
        let dt = 1e-3;
        let full = direct_integrate(&sys, &s0, 0.2, dt).unwrap();
        let mid = full.states.len() / 2;
        let a_of = |i: usize| -> DMatrix<f64> {
            adjoint_matrix(&sys.rep, &sys.alg, &full.states[i].g).unwrap()
        };
        let aw = |i: usize| -> DVector<f64> { a_of(i) * &full.states[i].w };
        // 4th-order central difference in grid index.
        let fd = (aw(mid - 2) - aw(mid - 1) * 8.0 + aw(mid + 1) * 8.0 - aw(mid + 2)) / (12.0 * dt);
        let s_mid = full.states[mid].reduced();
        let rhs = a_of(mid) * upsilon_corrected_vertical(&sys, &s_mid).unwrap();
        assert!(
            (fd.clone() - rhs.clone()).norm() < 1e-8,
            "fd {fd} vs formula {rhs}"
        );
    }
}
