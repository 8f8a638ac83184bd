//! Brute-force coordinate Euler-Lagrange oracle.
//!
//! Integrates `d/dt(∂L/∂q̇) − ∂L/∂q = 0` in an explicit coordinate chart on
//! `U×G`, with every derivative taken by finite differences of the scalar
//! `L(q, q̇)`. No structure constants, connection coefficients or reduced
//! equations are involved, so trajectories mapped back to quasi-velocities
//! are an independent check of the reduced engine.

use nalgebra::{DMatrix, DVector};

use lpr::dynamics::ReducedState;
use lpr::scenarios::System;

type ChartFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64>>;

/// Coordinate chart on the group factor.
pub struct GroupChart {
    pub dim: usize,
    pub to_matrix: ChartFn,
}

impl GroupChart {
    /// Affine line: `(θ, φ) ↦ [[exp θ, φ], [0, 1]]`.
    pub fn affine() -> Self {
        GroupChart {
            dim: 2,
            to_matrix: Box::new(|q| DMatrix::from_row_slice(2, 2, &[q[0].exp(), q[1], 0.0, 1.0])),
        }
    }

    /// Circle: `θ ↦ R(θ)`.
    pub fn circle() -> Self {
        GroupChart {
            dim: 1,
            to_matrix: Box::new(|q| {
                DMatrix::from_row_slice(2, 2, &[q[0].cos(), -q[0].sin(), q[0].sin(), q[0].cos()])
            }),
        }
    }

    /// Exponential chart on SO(3), valid near the identity.
    pub fn so3_exp() -> Self {
        let rep = lpr::scenarios::so3_rep();
        GroupChart {
            dim: 3,
            to_matrix: Box::new(move |q| lpr::numeric::matrix_exp(&rep.embed(q))),
        }
    }
}

pub struct ElOracle<'a> {
    sys: &'a System,
    chart: GroupChart,
    m: usize,
    n: usize,
}

impl<'a> ElOracle<'a> {
    pub fn new(sys: &'a System, chart: GroupChart) -> Self {
        let m = sys.base_dim();
        let n = m + chart.dim;
        Self { sys, chart, m, n }
    }

    fn group_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        (self.chart.to_matrix)(&q.rows(self.m, self.chart.dim).into_owned())
    }

    /// `dR/dq_j` for a group chart coordinate, by 4th-order differences.
    fn group_matrix_deriv(&self, q: &DVector<f64>, j: usize) -> DMatrix<f64> {
        let h = 1e-6 * q[self.m + j].abs().max(1.0);
        let shifted = |c: f64| {
            let mut qq = q.clone();
            qq[self.m + j] += c * h;
            self.group_matrix(&qq)
        };
        (shifted(-2.0) - shifted(-1.0) * 8.0 + shifted(1.0) * 8.0 - shifted(2.0)) / (12.0 * h)
    }

    /// Body (left-trivialized) Jacobian: column `j` holds the coordinates of
    /// `R⁻¹ ∂R/∂q_j` in the representation basis.
    fn body_jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let r = self.group_matrix(q);
        let r_inv = r.clone().try_inverse().expect("chart matrix invertible");
        let k = self.sys.fiber_dim();
        let mut jac = DMatrix::zeros(k, self.chart.dim);
        for j in 0..self.chart.dim {
            let body = &r_inv * self.group_matrix_deriv(q, j);
            jac.set_column(j, &expand_in_rep_basis(self.sys, &body));
        }
        jac
    }

    /// Quasi-velocities of the full state: `v = ẋ`, `w = ϑ(Ṙ) + γ(x)·ẋ`.
    pub fn quasi_velocities(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> ReducedState {
        let x = q.rows(0, self.m).into_owned();
        let v = qdot.rows(0, self.m).into_owned();
        let theta = self.body_jacobian(q) * qdot.rows(self.m, self.chart.dim).into_owned();
        let gamma = self.sys.chart.gamma(&x).expect("gamma evaluates");
        let w = theta + gamma * &v;
        ReducedState::new(x, v, w)
    }

    /// Chart velocity matching given quasi-velocities at a chart point.
    pub fn chart_velocity(&self, q: &DVector<f64>, s: &ReducedState) -> DVector<f64> {
        let gamma = self.sys.chart.gamma(&s.x).expect("gamma evaluates");
        let lambda = &s.w - gamma * &s.v;
        let jac = self.body_jacobian(q);
        let qdot_g = jac
            .full_piv_lu()
            .solve(&lambda)
            .expect("body Jacobian invertible");
        let mut qdot = DVector::zeros(self.n);
        qdot.rows_mut(0, self.m).copy_from(&s.v);
        qdot.rows_mut(self.m, self.chart.dim).copy_from(&qdot_g);
        qdot
    }

    /// The full Lagrangian in chart coordinates.
    fn lagrangian(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> f64 {
        let s = self.quasi_velocities(q, qdot);
        self.sys.lagrangian.eval(&s).expect("state in domain")
    }

    /// Coordinate accelerations from the Euler-Lagrange equations with every
    /// derivative of `L` taken by finite differences.
    fn accel(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let l = |q: &DVector<f64>, qd: &DVector<f64>| self.lagrangian(q, qd);

        // Mass matrix ∂²L/∂q̇_i∂q̇_j.
        let mut mass = DMatrix::zeros(n, n);
        for i in 0..n {
            let hi = 1e-4 * qdot[i].abs().max(1.0);
            for j in i..n {
                let d = if i == j {
                    let mut p = qdot.clone();
                    let mut mm = qdot.clone();
                    p[i] += hi;
                    mm[i] -= hi;
                    (l(q, &p) - 2.0 * l(q, qdot) + l(q, &mm)) / (hi * hi)
                } else {
                    let hj = 1e-4 * qdot[j].abs().max(1.0);
                    let mut pp = qdot.clone();
                    let mut pm = qdot.clone();
                    let mut mp = qdot.clone();
                    let mut mm = qdot.clone();
                    pp[i] += hi;
                    pp[j] += hj;
                    pm[i] += hi;
                    pm[j] -= hj;
                    mp[i] -= hi;
                    mp[j] += hj;
                    mm[i] -= hi;
                    mm[j] -= hj;
                    (l(q, &pp) - l(q, &pm) - l(q, &mp) + l(q, &mm)) / (4.0 * hi * hj)
                };
                mass[(i, j)] = d;
                mass[(j, i)] = d;
            }
        }

        // Force: ∂L/∂q_i − Σ_j ∂²L/∂q̇_i∂q_j q̇_j.
        let mut force = DVector::zeros(n);
        for i in 0..n {
            let hi = 1e-6 * q[i].abs().max(1.0);
            let dldq = {
                let shifted = |c: f64| {
                    let mut qq = q.clone();
                    qq[i] += c * hi;
                    l(&qq, qdot)
                };
                (shifted(-2.0) - shifted(-1.0) * 8.0 + shifted(1.0) * 8.0 - shifted(2.0))
                    / (12.0 * hi)
            };
            force[i] = dldq;
        }
        for j in 0..n {
            let hj = 1e-4 * q[j].abs().max(1.0);
            // ∂/∂q_j of the velocity gradient, one column at a time.
            let grad_v = |qq: &DVector<f64>| -> DVector<f64> {
                let mut g = DVector::zeros(n);
                for i in 0..n {
                    let hv = 1e-4 * qdot[i].abs().max(1.0);
                    let mut p = qdot.clone();
                    let mut mm = qdot.clone();
                    p[i] += hv;
                    mm[i] -= hv;
                    g[i] = (l(qq, &p) - l(qq, &mm)) / (2.0 * hv);
                }
                g
            };
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[j] += hj;
            qm[j] -= hj;
            let mixed_col = (grad_v(&qp) - grad_v(&qm)) / (2.0 * hj);
            force -= mixed_col * qdot[j];
        }

        mass.full_piv_lu()
            .solve(&force)
            .expect("mass matrix regular")
    }

    /// RK4 in chart coordinates; returns reduced-state samples on the grid.
    pub fn integrate(
        &self,
        q0: &DVector<f64>,
        qdot0: &DVector<f64>,
        t_end: f64,
        dt: f64,
    ) -> Vec<ReducedState> {
        let steps = (t_end / dt).round() as usize;
        let mut q = q0.clone();
        let mut qd = qdot0.clone();
        let mut out = vec![self.quasi_velocities(&q, &qd)];
        for _ in 0..steps {
            let a1 = self.accel(&q, &qd);
            let (q2, v2) = (&q + &qd * (0.5 * dt), &qd + &a1 * (0.5 * dt));
            let a2 = self.accel(&q2, &v2);
            let (q3, v3) = (&q + &v2 * (0.5 * dt), &qd + &a2 * (0.5 * dt));
            let a3 = self.accel(&q3, &v3);
            let (q4, v4) = (&q + &v3 * dt, &qd + &a3 * dt);
            let a4 = self.accel(&q4, &v4);
            q += (&qd + &v2 * 2.0 + &v3 * 2.0 + &v4) * (dt / 6.0);
            qd += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0);
            out.push(self.quasi_velocities(&q, &qd));
        }
        out
    }
}

/// Expand an algebra-valued matrix in the representation basis by plain least
/// squares (tolerant of finite-difference noise in the input).
fn expand_in_rep_basis(sys: &System, body: &DMatrix<f64>) -> DVector<f64> {
    let n = sys.rep.matrix_dim();
    let k = sys.fiber_dim();
    let mut basis = DMatrix::zeros(n * n, k);
    for a in 0..k {
        for (idx, val) in sys.rep.basis_matrix(a).iter().enumerate() {
            basis[(idx, a)] = *val;
        }
    }
    let rhs = DVector::from_iterator(n * n, body.iter().copied());
    basis
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .expect("representation basis has full rank")
}

/// Componentwise max distance between two reduced states.
pub fn state_distance(a: &ReducedState, b: &ReducedState) -> f64 {
    (&a.x - &b.x)
        .amax()
        .max((&a.v - &b.v).amax())
        .max((&a.w - &b.w).amax())
}
