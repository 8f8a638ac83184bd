//! Built-in systems wiring algebra, representation, chart and Lagrangian
//! together, with closed-form reference solutions where they exist.
//!
//! Registry ids: `affine`, `kaluza-klein`, `rigid-body`, `wong-demo`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::bundle::BundleChart;
use crate::dynamics::ReducedState;
use crate::error::{LprError, Result};
use crate::lagrangian::{DomainGuard, Gradient, HessianBlocks, MixedBlocks, ReducedLagrangian};
use crate::lie_core::{GroupElement, GroupRep, LieAlgebraSpec};
use crate::numeric::Tensor3;
use crate::reconstruction::FullState;

type ClosedFormFn = Box<dyn Fn(&FullState, f64) -> Result<FullState> + Send + Sync>;
type MomentumInverseFn =
    Box<dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
type IcBuilderFn = Box<dyn Fn(&BTreeMap<String, f64>) -> Result<FullState> + Send + Sync>;

/// A fully wired invariant Lagrangian system on a trivialized bundle.
pub struct System {
    pub id: String,
    pub alg: LieAlgebraSpec,
    pub rep: GroupRep,
    pub chart: BundleChart,
    pub lagrangian: ReducedLagrangian,
    pub params: BTreeMap<String, f64>,
    closed_form: Option<ClosedFormFn>,
    pub(crate) momentum_inverse: Option<MomentumInverseFn>,
    pub(crate) newton_seed: Option<DVector<f64>>,
    default_ics: BTreeMap<String, f64>,
    ic_builder: Option<IcBuilderFn>,
}

impl System {
    pub fn builder(id: impl Into<String>) -> SystemBuilder {
        SystemBuilder::new(id)
    }

    pub fn base_dim(&self) -> usize {
        self.chart.base_dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.alg.dim()
    }

    pub fn matrix_dim(&self) -> usize {
        self.rep.matrix_dim()
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form.is_some()
    }

    /// Evaluate the registered closed-form solution through the initial state.
    pub fn closed_form(&self, ic: &FullState, t: f64) -> Result<FullState> {
        match &self.closed_form {
            Some(f) => f(ic, t),
            None => Err(LprError::Precondition(format!(
                "scenario `{}` has no closed-form solution",
                self.id
            ))),
        }
    }

    /// Named initial-condition keys and their default values.
    pub fn default_ics(&self) -> &BTreeMap<String, f64> {
        &self.default_ics
    }

    /// Build a full initial state from named values; unspecified names take
    /// their defaults, unknown names are rejected.
    pub fn initial_state(&self, overrides: &BTreeMap<String, f64>) -> Result<FullState> {
        let builder = self.ic_builder.as_ref().ok_or_else(|| {
            LprError::Config(format!(
                "scenario `{}` has no initial-state builder",
                self.id
            ))
        })?;
        let mut ics = self.default_ics.clone();
        for (key, value) in overrides {
            if !ics.contains_key(key) {
                let valid: Vec<&str> = ics.keys().map(|s| s.as_str()).collect();
                return Err(LprError::Config(format!(
                    "unknown initial condition `{key}`; valid names: {}",
                    valid.join(", ")
                )));
            }
            ics.insert(key.clone(), *value);
        }
        builder(&ics)
    }

    pub fn default_initial_state(&self) -> Result<FullState> {
        self.initial_state(&BTreeMap::new())
    }
}

impl std::fmt::Debug for System {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("System")
            .field("id", &self.id)
            .field("base_dim", &self.base_dim())
            .field("fiber_dim", &self.fiber_dim())
            .field("params", &self.params)
            .finish()
    }
}

/// Step-by-step construction of a [`System`] with dimension validation.
pub struct SystemBuilder {
    id: String,
    alg: Option<LieAlgebraSpec>,
    rep: Option<GroupRep>,
    chart: Option<BundleChart>,
    lagrangian: Option<ReducedLagrangian>,
    params: BTreeMap<String, f64>,
    closed_form: Option<ClosedFormFn>,
    momentum_inverse: Option<MomentumInverseFn>,
    newton_seed: Option<DVector<f64>>,
    default_ics: BTreeMap<String, f64>,
    ic_builder: Option<IcBuilderFn>,
}

impl SystemBuilder {
    fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            alg: None,
            rep: None,
            chart: None,
            lagrangian: None,
            params: BTreeMap::new(),
            closed_form: None,
            momentum_inverse: None,
            newton_seed: None,
            default_ics: BTreeMap::new(),
            ic_builder: None,
        }
    }

    pub fn algebra(mut self, alg: LieAlgebraSpec) -> Self {
        self.alg = Some(alg);
        self
    }

    pub fn rep(mut self, rep: GroupRep) -> Self {
        self.rep = Some(rep);
        self
    }

    pub fn chart(mut self, chart: BundleChart) -> Self {
        self.chart = Some(chart);
        self
    }

    pub fn lagrangian(mut self, lag: ReducedLagrangian) -> Self {
        self.lagrangian = Some(lag);
        self
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn closed_form(mut self, f: ClosedFormFn) -> Self {
        self.closed_form = Some(f);
        self
    }

    pub fn momentum_inverse(mut self, f: MomentumInverseFn) -> Self {
        self.momentum_inverse = Some(f);
        self
    }

    pub fn newton_seed(mut self, seed: DVector<f64>) -> Self {
        self.newton_seed = Some(seed);
        self
    }

    pub fn default_ic(mut self, key: &str, value: f64) -> Self {
        self.default_ics.insert(key.into(), value);
        self
    }

    pub fn ic_builder(mut self, f: IcBuilderFn) -> Self {
        self.ic_builder = Some(f);
        self
    }

    pub fn build(self) -> Result<System> {
        let alg = self
            .alg
            .ok_or_else(|| LprError::Config("system needs an algebra".into()))?;
        let rep = self
            .rep
            .ok_or_else(|| LprError::Config("system needs a representation".into()))?;
        let chart = self
            .chart
            .ok_or_else(|| LprError::Config("system needs a chart".into()))?;
        let lagrangian = self
            .lagrangian
            .ok_or_else(|| LprError::Config("system needs a Lagrangian".into()))?;
        if rep.algebra_dim() != alg.dim() {
            return Err(LprError::DimensionMismatch {
                what: "representation basis",
                expected: alg.dim(),
                got: rep.algebra_dim(),
            });
        }
        if chart.fiber_dim() != alg.dim() {
            return Err(LprError::DimensionMismatch {
                what: "chart fiber dimension",
                expected: alg.dim(),
                got: chart.fiber_dim(),
            });
        }
        if lagrangian.base_dim() != chart.base_dim() || lagrangian.fiber_dim() != alg.dim() {
            return Err(LprError::DimensionMismatch {
                what: "Lagrangian dimensions",
                expected: chart.base_dim(),
                got: lagrangian.base_dim(),
            });
        }
        Ok(System {
            id: self.id,
            alg,
            rep,
            chart,
            lagrangian,
            params: self.params,
            closed_form: self.closed_form,
            momentum_inverse: self.momentum_inverse,
            newton_seed: self.newton_seed,
            default_ics: self.default_ics,
            ic_builder: self.ic_builder,
        })
    }
}

// ---------------------------------------------------------------------------
// Algebras and representations
// ---------------------------------------------------------------------------

/// Affine-line algebra: `[E₁, E₂] = E₂` (k = 2).
pub fn affine_algebra() -> LieAlgebraSpec {
    let mut c = Tensor3::zeros(2, 2, 2);
    c.set(1, 0, 1, 1.0);
    c.set(1, 1, 0, -1.0);
    LieAlgebraSpec::new(2, c).expect("affine structure constants are valid")
}

/// 2×2 representation of the affine group of the line: elements
/// `[[exp θ, φ], [0, 1]]`, algebra `[[a, b], [0, 0]]`.
pub fn affine_rep() -> GroupRep {
    let e1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let e2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    GroupRep::new(
        2,
        vec![e1, e2],
        Box::new(|m: &DMatrix<f64>| {
            let bottom = m[(1, 0)].abs().max((m[(1, 1)] - 1.0).abs());
            if m[(0, 0)] <= 0.0 {
                f64::INFINITY
            } else {
                bottom
            }
        }),
    )
}

/// Affine representation with the closed-form exponential registered:
/// `exp(a, b) = [[eᵃ, b·(eᵃ−1)/a], [0, 1]]`.
pub fn affine_rep_with_closed_forms() -> GroupRep {
    affine_rep().with_exp_override(Box::new(|xi: &DVector<f64>| {
        let (a, b) = (xi[0], xi[1]);
        let top = if a.abs() < 1e-300 {
            b
        } else {
            b * a.exp_m1() / a
        };
        DMatrix::from_row_slice(2, 2, &[a.exp(), top, 0.0, 1.0])
    }))
}

/// Group element of the affine line from coordinates `(θ, φ)`.
pub fn affine_element(rep: &GroupRep, theta: f64, phi: f64) -> Result<GroupElement> {
    rep.element(DMatrix::from_row_slice(2, 2, &[theta.exp(), phi, 0.0, 1.0]))
}

/// Coordinates `(θ, φ)` of an affine group element.
pub fn affine_coords(g: &GroupElement) -> (f64, f64) {
    (g.matrix()[(0, 0)].ln(), g.matrix()[(0, 1)])
}

/// so(3) with `[e_a, e_b] = ε_{abc} e_c`.
pub fn so3_algebra() -> LieAlgebraSpec {
    let mut c = Tensor3::zeros(3, 3, 3);
    for (a, b, cc, s) in [
        (0usize, 1usize, 2usize, 1.0f64),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
    ] {
        c.set(cc, a, b, s);
        c.set(cc, b, a, -s);
    }
    LieAlgebraSpec::new(3, c).expect("so(3) structure constants are valid")
}

/// Standard 3×3 rotation representation of SO(3); the algebra embeds by the
/// hat map.
pub fn so3_rep() -> GroupRep {
    let hat = |x: f64, y: f64, z: f64| {
        DMatrix::from_row_slice(3, 3, &[0.0, -z, y, z, 0.0, -x, -y, x, 0.0])
    };
    GroupRep::new(
        3,
        vec![hat(1.0, 0.0, 0.0), hat(0.0, 1.0, 0.0), hat(0.0, 0.0, 1.0)],
        Box::new(|m: &DMatrix<f64>| {
            let ortho = (m.transpose() * m - DMatrix::<f64>::identity(3, 3)).norm();
            ortho.max((m.determinant() - 1.0).abs())
        }),
    )
}

/// 2×2 rotation representation of the circle group.
pub fn circle_rep() -> GroupRep {
    let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    GroupRep::new(
        2,
        vec![j],
        Box::new(|m: &DMatrix<f64>| {
            let ortho = (m.transpose() * m - DMatrix::<f64>::identity(2, 2)).norm();
            ortho.max((m.determinant() - 1.0).abs())
        }),
    )
}

/// Rotation angle of a circle-group element.
pub fn circle_angle(g: &GroupElement) -> f64 {
    g.matrix()[(1, 0)].atan2(g.matrix()[(0, 0)])
}

// ---------------------------------------------------------------------------
// Affine scenario (worked example with closed forms)
// ---------------------------------------------------------------------------

/// The affine worked example: `M = G×R` with `G` the affine line,
/// `l = ½w₁² + qẋw₁ + ½ẋ² + ln w₂` on the domain `w₂ > 0`, trivial
/// connection, closed-form solution
/// `x(t) = −½qt²/(q²−1) + ẋ₀t + x₀`, `θ(t) = ½t²/(q²−1) + θ̇₀t + θ₀`,
/// `φ(t) = φ̇₀t + φ₀`. Regular for `q² ≠ 1`.
pub fn affine_scenario(q: f64) -> Result<System> {
    if (q * q - 1.0).abs() < 1e-12 {
        return Err(LprError::Precondition(
            "affine scenario requires q² ≠ 1 (Hessian regularity)".into(),
        ));
    }
    let value = move |s: &ReducedState| {
        0.5 * s.w[0] * s.w[0] + q * s.v[0] * s.w[0] + 0.5 * s.v[0] * s.v[0] + s.w[1].ln()
    };
    let grad = move |s: &ReducedState| Gradient {
        dx: DVector::zeros(1),
        dv: DVector::from_vec(vec![q * s.w[0] + s.v[0]]),
        dw: DVector::from_vec(vec![s.w[0] + q * s.v[0], 1.0 / s.w[1]]),
    };
    let hess = move |s: &ReducedState| {
        (
            HessianBlocks {
                g_ww: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0 / (s.w[1] * s.w[1])]),
                g_wv: DMatrix::from_row_slice(2, 1, &[q, 0.0]),
                g_vv: DMatrix::from_row_slice(1, 1, &[1.0]),
            },
            MixedBlocks {
                xv: DMatrix::zeros(1, 1),
                xw: DMatrix::zeros(2, 1),
            },
        )
    };
    let lag = ReducedLagrangian::new(1, 2, Box::new(value))
        .with_gradient(Box::new(grad))
        .with_hessian(Box::new(hess))
        .with_domain(DomainGuard::new(
            "w₂ > 0 (the Lagrangian contains ln w₂)",
            Box::new(|s: &ReducedState| s.w[1] > 0.0),
        ));

    let rep_for_cf = affine_rep_with_closed_forms();
    let closed_form: ClosedFormFn = Box::new(move |ic: &FullState, t: f64| {
        let (theta0, phi0) = affine_coords(&ic.g);
        let (x0, dx0) = (ic.x[0], ic.v[0]);
        let dtheta0 = ic.w[0];
        let dphi0 = ic.w[1] * theta0.exp();
        let denom = q * q - 1.0;
        let x = -0.5 * q * t * t / denom + dx0 * t + x0;
        let theta = 0.5 * t * t / denom + dtheta0 * t + theta0;
        let phi = dphi0 * t + phi0;
        let v = DVector::from_vec(vec![-q * t / denom + dx0]);
        let w1 = t / denom + dtheta0;
        let w2 = (-theta).exp() * dphi0;
        Ok(FullState {
            x: DVector::from_vec(vec![x]),
            g: affine_element(&rep_for_cf, theta, phi)?,
            v,
            w: DVector::from_vec(vec![w1, w2]),
        })
    });

    let rep_for_ics = affine_rep_with_closed_forms();
    let ic_builder: IcBuilderFn = Box::new(move |ics: &BTreeMap<String, f64>| {
        let theta0 = ics["theta0"];
        let phi0 = ics["phi0"];
        let dphi0 = ics["dphi0"];
        if dphi0 <= 0.0 {
            return Err(LprError::DomainViolation(
                "affine scenario assumes φ̇₀ > 0".into(),
            ));
        }
        Ok(FullState {
            x: DVector::from_vec(vec![ics["x0"]]),
            g: affine_element(&rep_for_ics, theta0, phi0)?,
            v: DVector::from_vec(vec![ics["dx0"]]),
            w: DVector::from_vec(vec![ics["dtheta0"], (-theta0).exp() * dphi0]),
        })
    });

    System::builder("affine")
        .algebra(affine_algebra())
        .rep(affine_rep_with_closed_forms())
        .chart(BundleChart::trivial(1, 2))
        .lagrangian(lag)
        .param("q", q)
        .closed_form(closed_form)
        .ic_builder(ic_builder)
        .default_ic("x0", 0.0)
        .default_ic("dx0", 1.0)
        .default_ic("theta0", 0.0)
        .default_ic("dtheta0", 0.0)
        .default_ic("phi0", 1.0)
        .default_ic("dphi0", 1.0)
        .build()
}

// ---------------------------------------------------------------------------
// Kaluza-Klein scenario
// ---------------------------------------------------------------------------

type CovectorFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type CovectorJacFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Charged particle on `E³×S¹` with the Kaluza-Klein metric: `γ_i = A_i`,
/// `l = ½|v|² + ½w²`. The reduced equations are the Lorentz-force system and
/// the scenario is Routh-reducible (Abelian fiber).
///
/// `da(x)` must return the Jacobian `∂A_i/∂x^j` as the `(i, j)` entry.
pub fn kaluza_klein_scenario(a: CovectorFn, da: CovectorJacFn) -> Result<System> {
    let gamma = move |x: &DVector<f64>| {
        let row = a(x);
        DMatrix::from_row_slice(1, 3, row.as_slice())
    };
    let dgamma = move |x: &DVector<f64>| {
        let jac = da(x);
        (0..3)
            .map(|j| DMatrix::from_row_slice(1, 3, &[jac[(0, j)], jac[(1, j)], jac[(2, j)]]))
            .collect::<Vec<_>>()
    };
    let chart = BundleChart::new(3, 1, Box::new(gamma)).with_dgamma(Box::new(dgamma));

    let lag = ReducedLagrangian::new(
        3,
        1,
        Box::new(|s: &ReducedState| 0.5 * s.v.norm_squared() + 0.5 * s.w[0] * s.w[0]),
    )
    .with_gradient(Box::new(|s: &ReducedState| Gradient {
        dx: DVector::zeros(3),
        dv: s.v.clone(),
        dw: s.w.clone(),
    }))
    .with_hessian(Box::new(|_s: &ReducedState| {
        (
            HessianBlocks {
                g_ww: DMatrix::identity(1, 1),
                g_wv: DMatrix::zeros(1, 3),
                g_vv: DMatrix::identity(3, 3),
            },
            MixedBlocks {
                xv: DMatrix::zeros(3, 3),
                xw: DMatrix::zeros(1, 3),
            },
        )
    }));

    let rep_for_ics = circle_rep();
    let ic_builder: IcBuilderFn = Box::new(move |ics: &BTreeMap<String, f64>| {
        let theta0 = ics["theta0"];
        let rot = DMatrix::from_row_slice(
            2,
            2,
            &[theta0.cos(), -theta0.sin(), theta0.sin(), theta0.cos()],
        );
        Ok(FullState {
            x: DVector::from_vec(vec![ics["x1"], ics["x2"], ics["x3"]]),
            g: rep_for_ics.element(rot)?,
            v: DVector::from_vec(vec![ics["v1"], ics["v2"], ics["v3"]]),
            w: DVector::from_vec(vec![ics["w0"]]),
        })
    });

    System::builder("kaluza-klein")
        .algebra(LieAlgebraSpec::abelian(1))
        .rep(circle_rep())
        .chart(chart)
        .lagrangian(lag)
        .momentum_inverse(Box::new(|_x, _v, mu: &DVector<f64>| mu.clone()))
        .ic_builder(ic_builder)
        .default_ic("x1", 0.0)
        .default_ic("x2", 0.0)
        .default_ic("x3", 0.0)
        .default_ic("v1", 1.0)
        .default_ic("v2", 0.0)
        .default_ic("v3", 0.1)
        .default_ic("theta0", 0.0)
        .default_ic("w0", 1.0)
        .build()
}

/// Kaluza-Klein scenario with the uniform-field potential
/// `A = (−½B x², ½B x¹, 0)`; trajectories are circular Larmor orbits of
/// radius `|v⊥|/(|w||B|)` and period `2π/(wB)`.
pub fn kaluza_klein_uniform_scenario(b_field: f64) -> Result<System> {
    let mut sys = kaluza_klein_scenario(
        Box::new(move |x: &DVector<f64>| {
            DVector::from_vec(vec![-0.5 * b_field * x[1], 0.5 * b_field * x[0], 0.0])
        }),
        Box::new(move |_x: &DVector<f64>| {
            DMatrix::from_row_slice(
                3,
                3,
                &[
                    0.0,
                    -0.5 * b_field,
                    0.0,
                    0.5 * b_field,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                ],
            )
        }),
    )?;
    sys.params.insert("B".into(), b_field);
    Ok(sys)
}

// ---------------------------------------------------------------------------
// Rigid body (Euler-Poincaré subcase, M = G = SO(3))
// ---------------------------------------------------------------------------

/// Free rigid body: `m = 0`, `G = SO(3)`, `l = ½(I₁w₁² + I₂w₂² + I₃w₃²)`.
/// The reduced equations collapse to Euler's equations; energy and `‖p‖` are
/// conserved.
pub fn rigid_body_scenario(inertia: [f64; 3]) -> Result<System> {
    if inertia.iter().any(|&i| i <= 0.0) {
        return Err(LprError::Precondition(
            "rigid body inertia values must be positive".into(),
        ));
    }
    let lag = ReducedLagrangian::new(
        0,
        3,
        Box::new(move |s: &ReducedState| {
            0.5 * (inertia[0] * s.w[0] * s.w[0]
                + inertia[1] * s.w[1] * s.w[1]
                + inertia[2] * s.w[2] * s.w[2])
        }),
    )
    .with_gradient(Box::new(move |s: &ReducedState| Gradient {
        dx: DVector::zeros(0),
        dv: DVector::zeros(0),
        dw: DVector::from_vec(vec![
            inertia[0] * s.w[0],
            inertia[1] * s.w[1],
            inertia[2] * s.w[2],
        ]),
    }))
    .with_hessian(Box::new(move |_s: &ReducedState| {
        (
            HessianBlocks {
                g_ww: DMatrix::from_diagonal(&DVector::from_vec(inertia.to_vec())),
                g_wv: DMatrix::zeros(3, 0),
                g_vv: DMatrix::zeros(0, 0),
            },
            MixedBlocks {
                xv: DMatrix::zeros(0, 0),
                xw: DMatrix::zeros(3, 0),
            },
        )
    }));

    let rep_for_ics = so3_rep();
    let ic_builder: IcBuilderFn = Box::new(move |ics: &BTreeMap<String, f64>| {
        Ok(FullState {
            x: DVector::zeros(0),
            g: rep_for_ics.identity(),
            v: DVector::zeros(0),
            w: DVector::from_vec(vec![ics["w1"], ics["w2"], ics["w3"]]),
        })
    });

    System::builder("rigid-body")
        .algebra(so3_algebra())
        .rep(so3_rep())
        .chart(BundleChart::trivial(0, 3))
        .lagrangian(lag)
        .param("I1", inertia[0])
        .param("I2", inertia[1])
        .param("I3", inertia[2])
        .ic_builder(ic_builder)
        .default_ic("w1", 0.3)
        .default_ic("w2", 1.0)
        .default_ic("w3", 0.2)
        .build()
}

// ---------------------------------------------------------------------------
// Wong scenario (curved base, non-Abelian fiber)
// ---------------------------------------------------------------------------

type MetricFn = std::sync::Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type MetricDerivFn = std::sync::Arc<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync>;

/// Particle in a Yang-Mills field: `l = ½g_ij(x)v^iv^j + ½h_ab w^aw^b` with a
/// constant ad-invariant fiber metric `h` and positive-definite base metric.
/// The reduced equations are Wong's equations: geodesics with curvature
/// coupling plus parallel transport of the internal charge. Wong's equations
/// are verified as a property of the assembled reduced flow, not implemented
/// as a separate code path.
///
/// `dmetric(x)` returns `∂g/∂x^j` as one matrix per `j`.
pub fn wong_scenario(
    id: &str,
    alg: LieAlgebraSpec,
    rep: GroupRep,
    chart: BundleChart,
    metric: MetricFn,
    dmetric: MetricDerivFn,
    h: DMatrix<f64>,
) -> Result<System> {
    let k = alg.dim();
    let m = chart.base_dim();
    // Ad-invariance: h_ad C^d_bc + h_bd C^d_ac = 0 for all (a, b, c).
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                let mut sum = 0.0;
                for d in 0..k {
                    sum += h[(a, d)] * alg.structure_constant(d, b, c)
                        + h[(b, d)] * alg.structure_constant(d, a, c);
                }
                if sum.abs() > 1e-12 {
                    return Err(LprError::Precondition(format!(
                        "fiber metric is not ad-invariant at (a={a}, b={b}, c={c}): {sum:.3e}"
                    )));
                }
            }
        }
    }

    let (h_val, h_grad, h_hess) = (h.clone(), h.clone(), h);
    let (metric_val, metric_grad, metric_hess) = (metric.clone(), metric.clone(), metric);
    let (dmetric_grad, dmetric_hess) = (dmetric.clone(), dmetric);

    let lag = ReducedLagrangian::new(
        m,
        k,
        Box::new(move |s: &ReducedState| {
            let g = metric_val(&s.x);
            0.5 * s.v.dot(&(&g * &s.v)) + 0.5 * s.w.dot(&(&h_val * &s.w))
        }),
    )
    .with_gradient(Box::new(move |s: &ReducedState| {
        let dg = dmetric_grad(&s.x);
        let mut dx = DVector::zeros(s.x.len());
        for (j, dgj) in dg.iter().enumerate() {
            dx[j] = 0.5 * s.v.dot(&(dgj * &s.v));
        }
        Gradient {
            dx,
            dv: metric_grad(&s.x) * &s.v,
            dw: &h_grad * &s.w,
        }
    }))
    .with_hessian(Box::new(move |s: &ReducedState| {
        let m = s.x.len();
        let dg = dmetric_hess(&s.x);
        let mut xv = DMatrix::zeros(m, m);
        for (j, dgj) in dg.iter().enumerate() {
            xv.set_column(j, &(dgj * &s.v));
        }
        (
            HessianBlocks {
                g_ww: h_hess.clone(),
                g_wv: DMatrix::zeros(h_hess.nrows(), m),
                g_vv: metric_hess(&s.x),
            },
            MixedBlocks {
                xv,
                xw: DMatrix::zeros(h_hess.nrows(), m),
            },
        )
    }));

    let identity_dim = rep.matrix_dim();
    let ic_builder: IcBuilderFn = Box::new(move |ics: &BTreeMap<String, f64>| {
        let x = DVector::from_iterator(m, (1..=m).map(|i| ics[&format!("x{i}")]));
        let v = DVector::from_iterator(m, (1..=m).map(|i| ics[&format!("v{i}")]));
        let w = DVector::from_iterator(k, (1..=k).map(|a| ics[&format!("w{a}")]));
        Ok(FullState {
            x,
            g: GroupElement::identity_of_dim(identity_dim),
            v,
            w,
        })
    });

    let mut builder = System::builder(id)
        .algebra(alg)
        .rep(rep)
        .chart(chart)
        .lagrangian(lag)
        .ic_builder(ic_builder);
    for i in 1..=m {
        builder = builder.default_ic(&format!("x{i}"), 0.0);
        builder = builder.default_ic(&format!("v{i}"), 0.0);
    }
    for a in 1..=k {
        builder = builder.default_ic(&format!("w{a}"), 0.0);
    }
    builder.build()
}

/// Concrete Wong demonstration system: 2-dimensional curved diagonal base
/// metric, SO(3) fiber with the identity (Killing-multiple) metric, and a
/// smooth nonconstant connection, so `K ≠ 0` and `Υ ≠ 0`. Anisotropic fiber
/// metrics are rejected by the ad-invariance check: on SO(3) only multiples
/// of the Killing form qualify.
pub fn wong_demo_scenario() -> Result<System> {
    let metric: MetricFn = std::sync::Arc::new(|x: &DVector<f64>| {
        DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.0 + 0.5 * x[1] * x[1],
            1.0 + 0.3 * x[0] * x[0],
        ]))
    });
    let dmetric: MetricDerivFn = std::sync::Arc::new(|x: &DVector<f64>| {
        vec![
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.6 * x[0]])),
            DMatrix::from_diagonal(&DVector::from_vec(vec![x[1], 0.0])),
        ]
    });
    let mut sys = wong_scenario(
        "wong-demo",
        so3_algebra(),
        so3_rep(),
        wong_demo_chart(),
        metric,
        dmetric,
        DMatrix::identity(3, 3),
    )?;
    for (key, value) in [
        ("x1", 0.2),
        ("x2", -0.1),
        ("v1", 0.5),
        ("v2", 0.3),
        ("w1", 0.4),
        ("w2", -0.2),
        ("w3", 0.3),
    ] {
        sys.default_ics.insert(key.into(), value);
    }
    Ok(sys)
}

/// The smooth nonconstant connection used by the Wong demonstration.
pub fn wong_demo_chart() -> BundleChart {
    BundleChart::new(
        2,
        3,
        Box::new(|x: &DVector<f64>| {
            DMatrix::from_row_slice(
                3,
                2,
                &[0.2 * x[1], 0.1, -0.1 * x[0], 0.3 * x[1], 0.05, 0.2 * x[0]],
            )
        }),
    )
    .with_dgamma(Box::new(|_x: &DVector<f64>| {
        vec![
            DMatrix::from_row_slice(3, 2, &[0.0, 0.0, -0.1, 0.0, 0.0, 0.2]),
            DMatrix::from_row_slice(3, 2, &[0.2, 0.0, 0.0, 0.3, 0.0, 0.0]),
        ]
    }))
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

/// Registered scenario ids with one-line descriptions.
pub fn registry() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "affine",
            "affine-line group worked example with closed-form solutions (param q)",
        ),
        (
            "kaluza-klein",
            "charged particle in a uniform magnetic field, Abelian fiber (param B)",
        ),
        (
            "rigid-body",
            "free rigid body, Euler-Poincaré subcase on SO(3) (params I1, I2, I3)",
        ),
        (
            "wong-demo",
            "Wong's equations on a curved base with an SO(3) fiber (no params)",
        ),
    ]
}

/// Build a registered scenario from its id and parameter overrides.
pub fn build(id: &str, params: &BTreeMap<String, f64>) -> Result<System> {
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    let reject_unknown = |valid: &[&str]| -> Result<()> {
        for key in params.keys() {
            if !valid.contains(&key.as_str()) {
                return Err(LprError::Config(format!(
                    "unknown parameter `{key}` (valid: {})",
                    valid.join(", ")
                )));
            }
        }
        Ok(())
    };
    match id {
        "affine" => {
            reject_unknown(&["q"])?;
            affine_scenario(get("q", 2.0))
        }
        "kaluza-klein" => {
            reject_unknown(&["B"])?;
            kaluza_klein_uniform_scenario(get("B", 1.0))
        }
        "rigid-body" => {
            reject_unknown(&["I1", "I2", "I3"])?;
            rigid_body_scenario([get("I1", 1.0), get("I2", 2.0), get("I3", 3.0)])
        }
        "wong-demo" => {
            reject_unknown(&[])?;
            wong_demo_scenario()
        }
        _ => Err(LprError::UnknownScenario {
            id: id.into(),
            available: registry()
                .iter()
                .map(|(name, _)| *name)
                .collect::<Vec<_>>()
                .join(", "),
        }),
    }
}
