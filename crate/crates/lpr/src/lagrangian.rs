//! The reduced Lagrangian `l(x, v, w)`, its derivative engine, the block
//! Hessian in the invariant basis, regularity checks, and the generalized
//! mechanical connection coefficients.
//!
//! The invariant basis is primary: all stored blocks are functions of
//! `(x, v, w)` only. Quantities in the fundamental (tilde) basis are derived
//! views obtained through the adjoint matrix.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::ReducedState;
use crate::error::{LprError, Result};
use crate::numeric::{
    central_diff_first, central_diff_mixed, central_diff_second, solve_matrix_with_cond,
};

/// Relative tolerance for finite-difference vs analytic derivative agreement.
pub const FD_VS_ANALYTIC_TOL: f64 = 1e-5;

/// First derivatives of the reduced Lagrangian at a state.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub dx: DVector<f64>,
    pub dv: DVector<f64>,
    pub dw: DVector<f64>,
}

/// Second derivatives of `l` in the fiber variables `(v, w)` at a state,
/// expressed in the invariant basis: `g_ww = ĝ_ab`, `g_wv = ĝ_ai` (k×m),
/// `g_vv = ĝ_ij`.
#[derive(Debug, Clone)]
pub struct HessianBlocks {
    pub g_ww: DMatrix<f64>,
    pub g_wv: DMatrix<f64>,
    pub g_vv: DMatrix<f64>,
}

impl HessianBlocks {
    /// Assemble the full symmetric `(k+m)×(k+m)` matrix, fiber block first.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let k = self.g_ww.nrows();
        let m = self.g_vv.nrows();
        let mut h = DMatrix::zeros(k + m, k + m);
        h.view_mut((0, 0), (k, k)).copy_from(&self.g_ww);
        h.view_mut((0, k), (k, m)).copy_from(&self.g_wv);
        h.view_mut((k, 0), (m, k)).copy_from(&self.g_wv.transpose());
        h.view_mut((k, k), (m, m)).copy_from(&self.g_vv);
        h
    }
}

/// Mixed second derivatives against the base point: `xv[(i, j)] = ∂²l/∂v^i∂x^j`
/// and `xw[(a, j)] = ∂²l/∂w^a∂x^j`.
#[derive(Debug, Clone)]
pub struct MixedBlocks {
    pub xv: DMatrix<f64>,
    pub xw: DMatrix<f64>,
}

/// Generalized mechanical connection coefficients `b^a_i` in the invariant
/// basis, defined by `ĝ_ab b^b_i = −ĝ_ai`.
#[derive(Debug, Clone)]
pub struct MechCoeffs {
    pub b: DMatrix<f64>,
}

type ValueFn = Box<dyn Fn(&ReducedState) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&ReducedState) -> Gradient + Send + Sync>;
type HessFn = Box<dyn Fn(&ReducedState) -> (HessianBlocks, MixedBlocks) + Send + Sync>;
type DomainFn = Box<dyn Fn(&ReducedState) -> bool + Send + Sync>;

/// Open-set domain constraint attached to a Lagrangian (e.g. `w₂ > 0`).
pub struct DomainGuard {
    pub description: String,
    check: DomainFn,
}

impl DomainGuard {
    pub fn new(description: impl Into<String>, check: DomainFn) -> Self {
        Self {
            description: description.into(),
            check,
        }
    }
}

/// The reduced Lagrangian with optional analytic derivatives. Evaluation
/// outside the declared domain raises a typed error rather than returning NaN.
pub struct ReducedLagrangian {
    base_dim: usize,
    fiber_dim: usize,
    value: ValueFn,
    grad: Option<GradFn>,
    hess: Option<HessFn>,
    domain: Option<DomainGuard>,
}

impl ReducedLagrangian {
    pub fn new(base_dim: usize, fiber_dim: usize, value: ValueFn) -> Self {
        Self {
            base_dim,
            fiber_dim,
            value,
            grad: None,
            hess: None,
            domain: None,
        }
    }

    pub fn with_gradient(mut self, grad: GradFn) -> Self {
        self.grad = Some(grad);
        self
    }

    pub fn with_hessian(mut self, hess: HessFn) -> Self {
        self.hess = Some(hess);
        self
    }

    pub fn with_domain(mut self, guard: DomainGuard) -> Self {
        self.domain = Some(guard);
        self
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hess.is_some()
    }

    /// Check the domain guard at a state.
    pub fn check_domain(&self, s: &ReducedState) -> Result<()> {
        if let Some(guard) = &self.domain {
            if !(guard.check)(s) {
                return Err(LprError::DomainViolation(guard.description.clone()));
            }
        }
        Ok(())
    }

    /// Evaluate `l` with the domain guard applied.
    pub fn eval(&self, s: &ReducedState) -> Result<f64> {
        self.check_dims(s)?;
        self.check_domain(s)?;
        Ok((self.value)(s))
    }

    fn check_dims(&self, s: &ReducedState) -> Result<()> {
        if s.x.len() != self.base_dim || s.v.len() != self.base_dim {
            return Err(LprError::DimensionMismatch {
                what: "reduced state base part",
                expected: self.base_dim,
                got: s.x.len(),
            });
        }
        if s.w.len() != self.fiber_dim {
            return Err(LprError::DimensionMismatch {
                what: "reduced state fiber part",
                expected: self.fiber_dim,
                got: s.w.len(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Debug for ReducedLagrangian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedLagrangian")
            .field("base_dim", &self.base_dim)
            .field("fiber_dim", &self.fiber_dim)
            .field("analytic_gradient", &self.grad.is_some())
            .field("analytic_hessian", &self.hess.is_some())
            .finish()
    }
}

/// Which coordinate slot of a reduced state a stencil perturbs.
#[derive(Clone, Copy)]
enum Slot {
    X(usize),
    V(usize),
    W(usize),
}

fn perturbed(s: &ReducedState, slot: Slot, value: f64) -> ReducedState {
    let mut out = s.clone();
    match slot {
        Slot::X(i) => out.x[i] = value,
        Slot::V(i) => out.v[i] = value,
        Slot::W(a) => out.w[a] = value,
    }
    out
}

fn slot_value(s: &ReducedState, slot: Slot) -> f64 {
    match slot {
        Slot::X(i) => s.x[i],
        Slot::V(i) => s.v[i],
        Slot::W(a) => s.w[a],
    }
}

/// First derivatives of `l` at `s`: analytic when supplied, otherwise
/// 4th-order central differences.
pub fn gradient(lag: &ReducedLagrangian, s: &ReducedState) -> Result<Gradient> {
    lag.check_dims(s)?;
    lag.check_domain(s)?;
    if let Some(g) = &lag.grad {
        return Ok(g(s));
    }
    gradient_fd(lag, s)
}

/// First derivatives by finite differences regardless of the analytic path
/// (used for cross-checks).
pub fn gradient_fd(lag: &ReducedLagrangian, s: &ReducedState) -> Result<Gradient> {
    lag.check_dims(s)?;
    lag.check_domain(s)?;
    let m = lag.base_dim;
    let k = lag.fiber_dim;
    let diff = |slot: Slot| -> Result<f64> {
        central_diff_first(|t| lag.eval(&perturbed(s, slot, t)), slot_value(s, slot))
    };
    let mut dx = DVector::zeros(m);
    let mut dv = DVector::zeros(m);
    let mut dw = DVector::zeros(k);
    for i in 0..m {
        dx[i] = diff(Slot::X(i))?;
        dv[i] = diff(Slot::V(i))?;
    }
    for a in 0..k {
        dw[a] = diff(Slot::W(a))?;
    }
    Ok(Gradient { dx, dv, dw })
}

/// Invariant-basis Hessian blocks of `l` in `(v, w)` at `s`.
pub fn hessian_blocks(lag: &ReducedLagrangian, s: &ReducedState) -> Result<HessianBlocks> {
    lag.check_dims(s)?;
    lag.check_domain(s)?;
    if let Some(h) = &lag.hess {
        return Ok(h(s).0);
    }
    hessian_blocks_fd(lag, s)
}

/// `(v, w)` Hessian blocks by 2nd-order central second differences.
pub fn hessian_blocks_fd(lag: &ReducedLagrangian, s: &ReducedState) -> Result<HessianBlocks> {
    lag.check_dims(s)?;
    lag.check_domain(s)?;
    let m = lag.base_dim;
    let k = lag.fiber_dim;
    let slots: Vec<Slot> = (0..k).map(Slot::W).chain((0..m).map(Slot::V)).collect();
    let n = k + m;
    let mut full = DMatrix::zeros(n, n);
    for p in 0..n {
        let d = central_diff_second(
            |t| lag.eval(&perturbed(s, slots[p], t)),
            slot_value(s, slots[p]),
        )?;
        full[(p, p)] = d;
        for q in (p + 1)..n {
            let d = central_diff_mixed(
                |a, b| lag.eval(&perturbed(&perturbed(s, slots[p], a), slots[q], b)),
                slot_value(s, slots[p]),
                slot_value(s, slots[q]),
            )?;
            full[(p, q)] = d;
            full[(q, p)] = d;
        }
    }
    Ok(HessianBlocks {
        g_ww: full.view((0, 0), (k, k)).into(),
        g_wv: full.view((0, k), (k, m)).into(),
        g_vv: full.view((k, k), (m, m)).into(),
    })
}

/// Mixed second derivatives `∂²l/∂x∂v` and `∂²l/∂x∂w`: analytic when
/// supplied, otherwise the first-derivative stencil applied to the gradient.
pub fn mixed_blocks(lag: &ReducedLagrangian, s: &ReducedState) -> Result<MixedBlocks> {
    lag.check_dims(s)?;
    lag.check_domain(s)?;
    if let Some(h) = &lag.hess {
        return Ok(h(s).1);
    }
    let m = lag.base_dim;
    let k = lag.fiber_dim;
    let mut xv = DMatrix::zeros(m, m);
    let mut xw = DMatrix::zeros(k, m);
    for j in 0..m {
        // One gradient per stencil point of x_j covers every (i, a) row.
        let col = |collect: &dyn Fn(&Gradient) -> DVector<f64>| -> Result<Vec<DVector<f64>>> {
            let h = crate::numeric::fd_first_step(s.x[j]);
            [-2.0, -1.0, 1.0, 2.0]
                .iter()
                .map(|c| {
                    let g = gradient(lag, &perturbed(s, Slot::X(j), s.x[j] + c * h))?;
                    Ok(collect(&g))
                })
                .collect()
        };
        let h = crate::numeric::fd_first_step(s.x[j]);
        let gv = col(&|g: &Gradient| g.dv.clone())?;
        let gw = col(&|g: &Gradient| g.dw.clone())?;
        let dv = (&gv[0] - &gv[1] * 8.0 + &gv[2] * 8.0 - &gv[3]) / (12.0 * h);
        let dw = (&gw[0] - &gw[1] * 8.0 + &gw[2] * 8.0 - &gw[3]) / (12.0 * h);
        xv.set_column(j, &dv);
        xw.set_column(j, &dw);
    }
    Ok(MixedBlocks { xv, xw })
}

/// Change the Hessian to the fundamental (tilde) basis through the adjoint
/// matrix: with `Ā = A⁻¹`, `g̃_ab = Ā^c_a Ā^d_b ĝ_cd`, `g̃_ai = Ā^c_a ĝ_ci`,
/// `g̃_ij = ĝ_ij`. Returns the full `(k+m)×(k+m)` matrix, fiber block first.
pub fn tilde_basis_hessian(blocks: &HessianBlocks, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = blocks.g_ww.nrows();
    let m = blocks.g_vv.nrows();
    let identity = DMatrix::identity(k, k);
    let (a_inv, _cond) = solve_matrix_with_cond(a, &identity, "adjoint matrix")?;
    let g_ww = a_inv.transpose() * &blocks.g_ww * &a_inv;
    let g_wv = a_inv.transpose() * &blocks.g_wv;
    let mut h = DMatrix::zeros(k + m, k + m);
    h.view_mut((0, 0), (k, k)).copy_from(&g_ww);
    h.view_mut((0, k), (k, m)).copy_from(&g_wv);
    h.view_mut((k, 0), (m, k)).copy_from(&g_wv.transpose());
    h.view_mut((k, k), (m, m)).copy_from(&blocks.g_vv);
    Ok(h)
}

/// Solve `ĝ_ab b^b_i = −ĝ_ai` for the mechanical connection coefficients.
/// Fails with the condition number when the fiber block is singular, in which
/// case the connection is undefined.
pub fn mech_connection_coeffs(blocks: &HessianBlocks) -> Result<MechCoeffs> {
    let rhs = -&blocks.g_wv;
    let (b, _cond) = solve_matrix_with_cond(&blocks.g_ww, &rhs, "fiber Hessian block g_ww")
        .map_err(|e| match e {
            LprError::SingularMatrix { cond, .. } => LprError::SingularMatrix {
                what: "fiber Hessian block g_ww (mechanical connection undefined)",
                cond,
            },
            other => other,
        })?;
    Ok(MechCoeffs { b })
}

/// Condition number of the full `(v, w)` Hessian, reported alongside
/// regularity failures.
pub fn regularity_report(blocks: &HessianBlocks) -> (f64, f64) {
    let full_cond = crate::numeric::condition_number(&blocks.full_matrix());
    let fiber_cond = crate::numeric::condition_number(&blocks.g_ww);
    (full_cond, fiber_cond)
}

/// Maximum componentwise relative disagreement between analytic and
/// finite-difference first derivatives at a state.
pub fn gradient_fd_error(lag: &ReducedLagrangian, s: &ReducedState) -> Result<f64> {
    let a = gradient(lag, s)?;
    let f = gradient_fd(lag, s)?;
    let err = |x: &DVector<f64>, y: &DVector<f64>| -> f64 {
        x.iter()
            .zip(y.iter())
            .map(|(p, q)| (p - q).abs() / p.abs().max(1.0))
            .fold(0.0, f64::max)
    };
    Ok(err(&a.dx, &f.dx)
        .max(err(&a.dv, &f.dv))
        .max(err(&a.dw, &f.dw)))
}

/// Maximum componentwise relative disagreement between analytic and
/// finite-difference `(v, w)` Hessian blocks at a state.
pub fn hessian_fd_error(lag: &ReducedLagrangian, s: &ReducedState) -> Result<f64> {
    let a = hessian_blocks(lag, s)?.full_matrix();
    let f = hessian_blocks_fd(lag, s)?.full_matrix();
    Ok(a.iter()
        .zip(f.iter())
        .map(|(p, q)| (p - q).abs() / p.abs().max(1.0))
        .fold(0.0, f64::max))
}

/// Residual `‖ĝ_ab b^b_i + ĝ_ai‖` of the mechanical-connection solve.
pub fn mech_coeffs_residual(blocks: &HessianBlocks, coeffs: &MechCoeffs) -> f64 {
    (&blocks.g_ww * &coeffs.b + &blocks.g_wv).norm()
}

/// Symmetry check used by the block-Hessian property tests.
pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    (m - m.transpose()).norm() <= tol
}
