//! The Lagrange-Poincaré equations as an explicit first-order system on the
//! reduced space `(x, v, w)`, a fixed-step RK4 integrator with dense output,
//! conserved-quantity monitors, and Abelian Routh reduction.
//!
//! With `p_a = ∂l/∂w^a` the reduced equations read
//!
//! ```text
//! d/dt(∂l/∂v^i) − ∂l/∂x^i = −(K^a_{ij} v^j + Υ^a_{ib} w^b) p_a
//! d/dt(∂l/∂w^a)           =  (Υ^b_{ia} v^i − C^b_{ac} w^c) p_b
//! ```
//!
//! The signs follow the stored bracket convention `[E_a, E_b] = C^c_{ab} E_c`
//! and are pinned by three independent checks: the affine worked example's
//! closed forms, brute-force coordinate Euler-Lagrange integration (see
//! `tests/oracle_el.rs`), and exact conservation of the energy
//! `E = v·∂l/∂v + w·∂l/∂w − l`, which fails for any flipped forcing term
//! with `Υ ≠ 0`.

use nalgebra::{DMatrix, DVector};

use crate::bundle::{curvature, upsilon};
use crate::error::{LprError, Result};
use crate::lagrangian::{gradient, hessian_blocks, mixed_blocks};
use crate::numeric::{cubic_hermite, solve_with_cond};
use crate::scenarios::System;

/// Newton tolerance for momentum level-set inversion.
pub const NEWTON_TOL: f64 = 1e-12;

/// Iteration cap for momentum level-set inversion.
pub const NEWTON_MAX_ITER: usize = 50;

/// A point of the reduced space: base coordinates and quasi-velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
}

impl ReducedState {
    pub fn new(x: DVector<f64>, v: DVector<f64>, w: DVector<f64>) -> Self {
        Self { x, v, w }
    }

    pub fn base_dim(&self) -> usize {
        self.x.len()
    }

    pub fn fiber_dim(&self) -> usize {
        self.w.len()
    }

    /// Pack as `(x; v; w)` for interpolation and norms.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.x.len() + self.v.len() + self.w.len());
        out.rows_mut(0, self.x.len()).copy_from(&self.x);
        out.rows_mut(self.x.len(), self.v.len()).copy_from(&self.v);
        out.rows_mut(self.x.len() + self.v.len(), self.w.len())
            .copy_from(&self.w);
        out
    }

    pub fn from_vector(m: usize, k: usize, packed: &DVector<f64>) -> Self {
        Self {
            x: packed.rows(0, m).into(),
            v: packed.rows(m, m).into(),
            w: packed.rows(2 * m, k).into(),
        }
    }
}

/// Time derivative of a reduced state.
#[derive(Debug, Clone)]
pub struct ReducedRhs {
    pub dx: DVector<f64>,
    pub dv: DVector<f64>,
    pub dw: DVector<f64>,
}

impl ReducedRhs {
    pub fn to_vector(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.dx.len() + self.dv.len() + self.dw.len());
        out.rows_mut(0, self.dx.len()).copy_from(&self.dx);
        out.rows_mut(self.dx.len(), self.dv.len())
            .copy_from(&self.dv);
        out.rows_mut(self.dx.len() + self.dv.len(), self.dw.len())
            .copy_from(&self.dw);
        out
    }
}

pub(crate) fn state_add_scaled(s: &ReducedState, k: &ReducedRhs, c: f64) -> ReducedState {
    ReducedState {
        x: &s.x + &k.dx * c,
        v: &s.v + &k.dv * c,
        w: &s.w + &k.dw * c,
    }
}

/// Metadata carried by a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryMeta {
    pub scenario: String,
    pub dt: f64,
    pub integrator: &'static str,
}

/// A time-sampled reduced solution with stored derivatives for dense
/// (cubic Hermite) output.
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
    pub derivs: Vec<ReducedRhs>,
    pub metadata: TrajectoryMeta,
}

impl ReducedTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &ReducedState {
        self.states.last().expect("trajectory is nonempty")
    }

    /// Index of the interval containing `t` (clamped to the grid).
    pub(crate) fn interval_of(&self, t: f64) -> usize {
        let n = self.times.len();
        if t <= self.times[0] {
            return 0;
        }
        if t >= self.times[n - 1] {
            return n - 2;
        }
        // Uniform except possibly the last interval.
        let dt = self.metadata.dt;
        let mut idx = ((t - self.times[0]) / dt) as usize;
        idx = idx.min(n - 2);
        while idx > 0 && t < self.times[idx] {
            idx -= 1;
        }
        while idx < n - 2 && t > self.times[idx + 1] {
            idx += 1;
        }
        idx
    }

    /// Dense state by cubic Hermite interpolation from stored states and
    /// derivatives; exact at grid nodes.
    pub fn sample(&self, t: f64) -> ReducedState {
        let i = self.interval_of(t);
        if t == self.times[i] {
            return self.states[i].clone();
        }
        if t == self.times[i + 1] {
            return self.states[i + 1].clone();
        }
        let h = self.times[i + 1] - self.times[i];
        let y = cubic_hermite(
            self.times[i],
            h,
            &self.states[i].to_vector(),
            &self.derivs[i].to_vector(),
            &self.states[i + 1].to_vector(),
            &self.derivs[i + 1].to_vector(),
            t,
        );
        let m = self.states[i].base_dim();
        let k = self.states[i].fiber_dim();
        ReducedState::from_vector(m, k, &y)
    }
}

/// Build the step list for `[0, t_end]`: uniform steps of `dt` with the final
/// partial step shortened to land on `t_end` exactly.
pub(crate) fn time_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if dt <= 0.0 || t_end <= 0.0 {
        return Err(LprError::Precondition(
            "t_end and dt must be positive".into(),
        ));
    }
    let ratio = t_end / dt;
    let mut n = ratio.floor() as usize;
    if ratio - n as f64 > 1e-9 {
        n += 1;
    }
    let n = n.max(1);
    let mut times = Vec::with_capacity(n + 1);
    for j in 0..n {
        times.push(j as f64 * dt);
    }
    times.push(t_end);
    if times[n] <= times[n - 1] {
        times.pop();
        let last = times.len() - 1;
        times[last] = t_end;
    }
    Ok(times)
}

/// Right-hand side of the Lagrange-Poincaré equations at a reduced state.
///
/// `dx = v`; `(dv, dw)` solve `H·(dv, dw)ᵀ = r` where `H` is the full
/// `(v, w)`-Hessian of `l` and `r` collects the connection, curvature and
/// structure-constant forcing minus the mixed `x`-derivative transport terms.
pub fn lp_rhs(sys: &System, s: &ReducedState) -> Result<ReducedRhs> {
    let m = s.base_dim();
    let k = s.fiber_dim();
    let lag = &sys.lagrangian;

    let grad = gradient(lag, s)?;
    let blocks = hessian_blocks(lag, s)?;
    let mixed = mixed_blocks(lag, s)?;
    let ups = upsilon(&sys.chart, &sys.alg, &s.x)?;
    let curv = curvature(&sys.chart, &sys.alg, &s.x)?;
    let p = &grad.dw;

    let mut r = DVector::zeros(m + k);
    for i in 0..m {
        let mut acc = grad.dx[i];
        for a in 0..k {
            let mut force = 0.0;
            for j in 0..m {
                force += curv.get(a, i, j) * s.v[j];
            }
            for b in 0..k {
                force += ups.get(a, i, b) * s.w[b];
            }
            acc -= force * p[a];
        }
        for j in 0..m {
            acc -= mixed.xv[(i, j)] * s.v[j];
        }
        r[i] = acc;
    }
    for a in 0..k {
        let mut acc = 0.0;
        for b in 0..k {
            let mut force = 0.0;
            for i in 0..m {
                force += ups.get(b, i, a) * s.v[i];
            }
            for c in 0..k {
                force -= sys.alg.structure_constant(b, a, c) * s.w[c];
            }
            acc += force * p[b];
        }
        for j in 0..m {
            acc -= mixed.xw[(a, j)] * s.v[j];
        }
        r[m + a] = acc;
    }

    let mut h = DMatrix::zeros(m + k, m + k);
    h.view_mut((0, 0), (m, m)).copy_from(&blocks.g_vv);
    h.view_mut((0, m), (m, k))
        .copy_from(&blocks.g_wv.transpose());
    h.view_mut((m, 0), (k, m)).copy_from(&blocks.g_wv);
    h.view_mut((m, m), (k, k)).copy_from(&blocks.g_ww);

    let (u, _cond) = solve_with_cond(&h, &r, "full (v, w) Hessian")?;
    Ok(ReducedRhs {
        dx: s.v.clone(),
        dv: u.rows(0, m).into(),
        dw: u.rows(m, k).into(),
    })
}

pub(crate) struct Rk4Sweep {
    pub k1: ReducedRhs,
    pub s2: ReducedState,
    pub s3: ReducedState,
    pub s4: ReducedState,
    pub next: ReducedState,
}

/// One classical RK4 sweep over the reduced variables, exposing stage states
/// so the group factor can be advanced jointly.
pub(crate) fn rk4_sweep(sys: &System, s: &ReducedState, dt: f64) -> Result<Rk4Sweep> {
    let k1 = lp_rhs(sys, s)?;
    let s2 = state_add_scaled(s, &k1, 0.5 * dt);
    let k2 = lp_rhs(sys, &s2)?;
    let s3 = state_add_scaled(s, &k2, 0.5 * dt);
    let k3 = lp_rhs(sys, &s3)?;
    let s4 = state_add_scaled(s, &k3, dt);
    let k4 = lp_rhs(sys, &s4)?;
    let next = ReducedState {
        x: &s.x + (&k1.dx + &k2.dx * 2.0 + &k3.dx * 2.0 + &k4.dx) * (dt / 6.0),
        v: &s.v + (&k1.dv + &k2.dv * 2.0 + &k3.dv * 2.0 + &k4.dv) * (dt / 6.0),
        w: &s.w + (&k1.dw + &k2.dw * 2.0 + &k3.dw * 2.0 + &k4.dw) * (dt / 6.0),
    };
    Ok(Rk4Sweep {
        k1,
        s2,
        s3,
        s4,
        next,
    })
}

/// Fixed-step RK4 integration of the reduced equations over `[0, t_end]`.
pub fn integrate_reduced(
    sys: &System,
    s0: &ReducedState,
    t_end: f64,
    dt: f64,
) -> Result<ReducedTrajectory> {
    let times = time_grid(t_end, dt)?;
    let mut states = Vec::with_capacity(times.len());
    let mut derivs = Vec::with_capacity(times.len());
    states.push(s0.clone());
    for i in 0..times.len() - 1 {
        let step = times[i + 1] - times[i];
        let sweep = rk4_sweep(sys, &states[i], step).map_err(|e| e.at_time(times[i]))?;
        derivs.push(sweep.k1);
        states.push(sweep.next);
    }
    let last =
        lp_rhs(sys, states.last().unwrap()).map_err(|e| e.at_time(*times.last().unwrap()))?;
    derivs.push(last);
    Ok(ReducedTrajectory {
        times,
        states,
        derivs,
        metadata: TrajectoryMeta {
            scenario: sys.id.clone(),
            dt,
            integrator: "rk4",
        },
    })
}

/// Step-doubling local error estimate at a state: the classical
/// `‖one dt step − two dt/2 steps‖ / (2⁴ − 1)` diagnostic for the 4th-order
/// stepper. Not used for step control (grids stay fixed); callers request it
/// explicitly.
pub fn step_doubling_error(sys: &System, s: &ReducedState, dt: f64) -> Result<f64> {
    let coarse = rk4_sweep(sys, s, dt)?.next;
    let half = rk4_sweep(sys, s, 0.5 * dt)?.next;
    let fine = rk4_sweep(sys, &half, 0.5 * dt)?.next;
    Ok((coarse.to_vector() - fine.to_vector()).norm() / 15.0)
}

/// Energy `E = v·∂l/∂v + w·∂l/∂w − l`; conserved because the reduced field is
/// autonomous.
pub fn energy(sys: &System, s: &ReducedState) -> Result<f64> {
    let grad = gradient(&sys.lagrangian, s)?;
    let l = sys.lagrangian.eval(s)?;
    Ok(s.v.dot(&grad.dv) + s.w.dot(&grad.dw) - l)
}

/// Fiber momentum `p_a = ∂l/∂w^a` (constant along the flow when the group is
/// Abelian and the connection is flat in the relevant sense).
pub fn momentum(sys: &System, s: &ReducedState) -> Result<DVector<f64>> {
    Ok(gradient(&sys.lagrangian, s)?.dw)
}

/// Effective second-order system on `(x, v)` produced by Abelian Routh
/// reduction at momentum level `μ`.
pub struct RouthSystem<'a> {
    sys: &'a System,
    mu: DVector<f64>,
}

/// Trajectory of a Routh-reduced system.
#[derive(Debug, Clone)]
pub struct RouthTrajectory {
    pub times: Vec<f64>,
    pub xs: Vec<DVector<f64>>,
    pub vs: Vec<DVector<f64>>,
}

/// Construct the Routh-reduced system. Requires an Abelian algebra and a
/// fiber Hessian block that is regular on the level set.
pub fn routh_reduce(sys: &System, mu: DVector<f64>) -> Result<RouthSystem<'_>> {
    if !sys.alg.is_abelian() {
        return Err(LprError::NonAbelian);
    }
    if mu.len() != sys.alg.dim() {
        return Err(LprError::DimensionMismatch {
            what: "momentum level",
            expected: sys.alg.dim(),
            got: mu.len(),
        });
    }
    Ok(RouthSystem { sys, mu })
}

impl RouthSystem<'_> {
    /// Solve `∂l/∂w(x, v, w) = μ` for `w`: the registered inverse when the
    /// scenario supplies one, otherwise damped Newton from the scenario seed.
    pub fn fiber_velocity(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        if let Some(inv) = &self.sys.momentum_inverse {
            return Ok(inv(x, v, &self.mu));
        }
        let seed = self
            .sys
            .newton_seed
            .clone()
            .unwrap_or_else(|| DVector::zeros(self.sys.alg.dim()));
        let tol = NEWTON_TOL * (1.0 + self.mu.norm());
        let mut w = seed;
        let residual = |w: &DVector<f64>| -> Result<DVector<f64>> {
            let s = ReducedState::new(x.clone(), v.clone(), w.clone());
            Ok(gradient(&self.sys.lagrangian, &s)?.dw - &self.mu)
        };
        let mut f = residual(&w)?;
        for _ in 0..NEWTON_MAX_ITER {
            if f.norm() <= tol {
                return Ok(w);
            }
            let s = ReducedState::new(x.clone(), v.clone(), w.clone());
            let jac = hessian_blocks(&self.sys.lagrangian, &s)?.g_ww;
            let (delta, _) = solve_with_cond(&jac, &f, "level-set Jacobian")?;
            // Damped update: halve the step until the residual decreases; a
            // stall means the iteration has hit its attainable floor.
            let mut alpha = 1.0;
            let stalled = loop {
                let trial = &w - &delta * alpha;
                match residual(&trial) {
                    Ok(ft) if ft.norm() < f.norm() => {
                        w = trial;
                        f = ft;
                        break false;
                    }
                    _ if alpha > 1.0 / 1024.0 => alpha *= 0.5,
                    _ => break true,
                }
            };
            if stalled {
                break;
            }
        }
        if f.norm() <= tol {
            Ok(w)
        } else {
            Err(LprError::RootFinding {
                iterations: NEWTON_MAX_ITER,
                residual: f.norm(),
            })
        }
    }

    /// The Routhian `R^μ(x, v) = l(x, v, ρ(x, v)) − μ·ρ(x, v)`.
    pub fn routhian(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let w = self.fiber_velocity(x, v)?;
        let s = ReducedState::new(x.clone(), v.clone(), w.clone());
        Ok(self.sys.lagrangian.eval(&s)? - self.mu.dot(&w))
    }

    /// Acceleration from Routh's equation
    /// `d/dt(∂R/∂v^i) − ∂R/∂x^i = −K^a_{ik} v^k μ_a`.
    ///
    /// All derivatives of `R` reduce to derivatives of `l` on the level set:
    /// `∂R/∂v = ∂l/∂v`, `∂R/∂x = ∂l/∂x`, and the velocity Hessian is the
    /// Schur complement `ĝ_vv − ĝ_wvᵀ ĝ_ww⁻¹ ĝ_wv`.
    pub fn rhs(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        let m = x.len();
        let w = self.fiber_velocity(x, v)?;
        let s = ReducedState::new(x.clone(), v.clone(), w);
        let grad = gradient(&self.sys.lagrangian, &s)?;
        let blocks = hessian_blocks(&self.sys.lagrangian, &s)?;
        let mixed = mixed_blocks(&self.sys.lagrangian, &s)?;
        let coeffs = crate::lagrangian::mech_connection_coeffs(&blocks)?;
        let curv = curvature(&self.sys.chart, &self.sys.alg, &s.x)?;

        // Mass matrix and mixed transport on the level set.
        let mass = &blocks.g_vv + blocks.g_wv.transpose() * &coeffs.b;
        let mixed_r = &mixed.xv + coeffs.b.transpose() * &mixed.xw;

        let mut r = DVector::zeros(m);
        for i in 0..m {
            let mut acc = grad.dx[i];
            for j in 0..m {
                acc -= mixed_r[(i, j)] * v[j];
            }
            for a in 0..self.mu.len() {
                let mut kv = 0.0;
                for j in 0..m {
                    kv += curv.get(a, i, j) * v[j];
                }
                acc -= kv * self.mu[a];
            }
            r[i] = acc;
        }
        let (dv, _cond) = solve_with_cond(&mass, &r, "Routh velocity Hessian")?;
        Ok(dv)
    }

    /// Fixed-step RK4 on the Routh-reduced system.
    pub fn integrate(
        &self,
        x0: &DVector<f64>,
        v0: &DVector<f64>,
        t_end: f64,
        dt: f64,
    ) -> Result<RouthTrajectory> {
        let times = time_grid(t_end, dt)?;
        let mut xs = vec![x0.clone()];
        let mut vs = vec![v0.clone()];
        for i in 0..times.len() - 1 {
            let h = times[i + 1] - times[i];
            let (x, v) = (&xs[i], &vs[i]);
            let wrap = |e: LprError| e.at_time(times[i]);
            let a1 = self.rhs(x, v).map_err(wrap)?;
            let x2 = x + v * (0.5 * h);
            let v2 = v + &a1 * (0.5 * h);
            let a2 = self.rhs(&x2, &v2).map_err(wrap)?;
            let x3 = x + &v2 * (0.5 * h);
            let v3 = v + &a2 * (0.5 * h);
            let a3 = self.rhs(&x3, &v3).map_err(wrap)?;
            let x4 = x + &v3 * h;
            let v4 = v + &a3 * h;
            let a4 = self.rhs(&x4, &v4).map_err(wrap)?;
            xs.push(x + (v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0));
            vs.push(v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0));
        }
        Ok(RouthTrajectory { times, xs, vs })
    }
}

/// Maximum energy drift `max_t |E(t) − E(0)|` along a reduced trajectory.
pub fn energy_drift(sys: &System, rt: &ReducedTrajectory) -> Result<f64> {
    let e0 = energy(sys, &rt.states[0])?;
    let mut worst = 0.0f64;
    for s in &rt.states {
        worst = worst.max((energy(sys, s)? - e0).abs());
    }
    Ok(worst)
}

/// Maximum momentum drift `max_t ‖p(t) − p(0)‖` along a reduced trajectory.
pub fn momentum_drift(sys: &System, rt: &ReducedTrajectory) -> Result<f64> {
    let p0 = momentum(sys, &rt.states[0])?;
    let mut worst = 0.0f64;
    for s in &rt.states {
        worst = worst.max((momentum(sys, s)? - &p0).norm());
    }
    Ok(worst)
}

/// Maximum drift of the momentum norm `max_t |‖p(t)‖ − ‖p(0)‖|`.
pub fn momentum_norm_drift(sys: &System, rt: &ReducedTrajectory) -> Result<f64> {
    let p0 = momentum(sys, &rt.states[0])?.norm();
    let mut worst = 0.0f64;
    for s in &rt.states {
        worst = worst.max((momentum(sys, s)?.norm() - p0).abs());
    }
    Ok(worst)
}
