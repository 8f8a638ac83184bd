//! Lie algebra structure constants, faithful matrix representations of the
//! symmetry group, the adjoint matrix, and a 4th-order Lie-group ODE stepper
//! (Runge-Kutta-Munthe-Kaas built on the matrix exponential).
//!
//! Conventions: structure constants are stored for the algebra bracket
//! `[E_a, E_b] = C^c_{ab} E_c`, which is also the bracket of the
//! left-invariant frame. Fundamental vector fields of a left action obey the
//! opposite sign; callers that need that convention flip it explicitly.
//! A group curve is advanced through its left-trivialized velocity
//! `λ = ϑ(ġ)`, the coordinates of `g⁻¹ġ` in the algebra basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{LprError, Result};
use crate::numeric::{least_squares, matrix_exp, solve_matrix_with_cond, Tensor3};

/// Default tolerance for group membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Tolerance on the antisymmetry check at algebra construction.
pub const ANTISYMMETRY_TOL: f64 = 1e-12;

/// Tolerance on the Jacobi identity check at algebra construction.
pub const JACOBI_TOL: f64 = 1e-10;

/// Residual tolerance for the adjoint-matrix basis expansion.
pub const ADJOINT_RESIDUAL_TOL: f64 = 1e-10;

/// A finite-dimensional real Lie algebra presented by structure constants.
///
/// `C^c_{ab}` is stored as `c.get(c, a, b)`, meaning `[E_a, E_b] = C^c_{ab} E_c`.
#[derive(Debug, Clone)]
pub struct LieAlgebraSpec {
    dim: usize,
    c: Tensor3,
}

impl LieAlgebraSpec {
    /// Validate antisymmetry and the Jacobi identity, rejecting bad input.
    pub fn new(dim: usize, c: Tensor3) -> Result<Self> {
        if dim == 0 {
            return Err(LprError::InvalidAlgebra(
                "dimension must be positive".into(),
            ));
        }
        if c.dims() != (dim, dim, dim) {
            return Err(LprError::DimensionMismatch {
                what: "structure constant tensor",
                expected: dim,
                got: c.dims().0,
            });
        }
        for cc in 0..dim {
            for a in 0..dim {
                for b in 0..dim {
                    let skew = c.get(cc, a, b) + c.get(cc, b, a);
                    if skew.abs() > ANTISYMMETRY_TOL {
                        return Err(LprError::InvalidAlgebra(format!(
                            "antisymmetry violated: C^{cc}_{{{a}{b}}} + C^{cc}_{{{b}{a}}} = {skew:.3e}"
                        )));
                    }
                }
            }
        }
        for a in 0..dim {
            for b in 0..dim {
                for cc in 0..dim {
                    for d in 0..dim {
                        let mut sum = 0.0;
                        for e in 0..dim {
                            sum += c.get(e, a, b) * c.get(d, e, cc)
                                + c.get(e, b, cc) * c.get(d, e, a)
                                + c.get(e, cc, a) * c.get(d, e, b);
                        }
                        if sum.abs() > JACOBI_TOL {
                            return Err(LprError::InvalidAlgebra(format!(
                                "Jacobi identity violated at (a={a}, b={b}, c={cc}, d={d}): {sum:.3e}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { dim, c })
    }

    /// Abelian algebra of the given dimension (all brackets vanish).
    pub fn abelian(dim: usize) -> Self {
        Self {
            dim,
            c: Tensor3::zeros(dim, dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `C^c_{ab}`.
    #[inline]
    pub fn structure_constant(&self, c: usize, a: usize, b: usize) -> f64 {
        self.c.get(c, a, b)
    }

    pub fn is_abelian(&self) -> bool {
        self.c.max_abs() == 0.0
    }

    /// Bracket in coordinates: `ζ^c = C^c_{ab} ξ^a η^b`.
    pub fn bracket(&self, xi: &DVector<f64>, eta: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(xi)?;
        self.check_len(eta)?;
        let mut out = DVector::zeros(self.dim);
        for c in 0..self.dim {
            let mut acc = 0.0;
            for a in 0..self.dim {
                if xi[a] == 0.0 {
                    continue;
                }
                for b in 0..self.dim {
                    acc += self.c.get(c, a, b) * xi[a] * eta[b];
                }
            }
            out[c] = acc;
        }
        Ok(out)
    }

    /// Matrix of `ad_ξ` in the basis: `(ad_ξ)^b_a = ξ^c C^b_{ca}`.
    pub fn ad_matrix(&self, xi: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(xi)?;
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for b in 0..self.dim {
            for a in 0..self.dim {
                let mut acc = 0.0;
                for c in 0..self.dim {
                    acc += xi[c] * self.c.get(b, c, a);
                }
                m[(b, a)] = acc;
            }
        }
        Ok(m)
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(LprError::DimensionMismatch {
                what: "algebra vector",
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// Public operation form of [`LieAlgebraSpec::bracket`].
pub fn bracket(
    alg: &LieAlgebraSpec,
    xi: &DVector<f64>,
    eta: &DVector<f64>,
) -> Result<DVector<f64>> {
    alg.bracket(xi, eta)
}

type MembershipFn = Box<dyn Fn(&DMatrix<f64>) -> f64 + Send + Sync>;
type ExpOverrideFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type AdjointOverrideFn = Box<dyn Fn(&GroupElement) -> DMatrix<f64> + Send + Sync>;

/// An element of the group, held as an `n×n` matrix in the representation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    m: DMatrix<f64>,
}

impl GroupElement {
    /// The identity element of any matrix group of the given dimension.
    pub fn identity_of_dim(n: usize) -> Self {
        GroupElement {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            m: &self.m * &other.m,
        }
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        let inv = self
            .m
            .clone()
            .try_inverse()
            .ok_or(LprError::SingularMatrix {
                what: "group element",
                cond: f64::INFINITY,
            })?;
        Ok(GroupElement { m: inv })
    }
}

/// Faithful matrix representation of the group and its algebra.
///
/// The embedding `ρ` is stored through the images `ρ(E_a)` of the basis, so it
/// is linear in the algebra coordinates by construction.
pub struct GroupRep {
    matrix_dim: usize,
    basis: Vec<DMatrix<f64>>,
    membership: MembershipFn,
    membership_tol: f64,
    exp_override: Option<ExpOverrideFn>,
    adjoint_override: Option<AdjointOverrideFn>,
}

impl GroupRep {
    /// Build a representation from the images of the algebra basis and a
    /// membership deviation function (zero on the group).
    pub fn new(matrix_dim: usize, basis: Vec<DMatrix<f64>>, membership: MembershipFn) -> Self {
        assert!(
            basis
                .iter()
                .all(|b| b.nrows() == matrix_dim && b.ncols() == matrix_dim),
            "basis matrices must be {matrix_dim}x{matrix_dim}"
        );
        Self {
            matrix_dim,
            basis,
            membership,
            membership_tol: MEMBERSHIP_TOL,
            exp_override: None,
            adjoint_override: None,
        }
    }

    /// Register a closed-form exponential for this group.
    pub fn with_exp_override(mut self, f: ExpOverrideFn) -> Self {
        self.exp_override = Some(f);
        self
    }

    /// Register a closed-form adjoint matrix for this group.
    pub fn with_adjoint_override(mut self, f: AdjointOverrideFn) -> Self {
        self.adjoint_override = Some(f);
        self
    }

    pub fn with_membership_tol(mut self, tol: f64) -> Self {
        self.membership_tol = tol;
        self
    }

    pub fn matrix_dim(&self) -> usize {
        self.matrix_dim
    }

    pub fn algebra_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn membership_tol(&self) -> f64 {
        self.membership_tol
    }

    /// `ρ(E_a)`.
    pub fn basis_matrix(&self, a: usize) -> &DMatrix<f64> {
        &self.basis[a]
    }

    /// Linear embedding `ρ(ξ) = ξ^a ρ(E_a)`.
    pub fn embed(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.matrix_dim, self.matrix_dim);
        for (a, b) in self.basis.iter().enumerate() {
            if xi[a] != 0.0 {
                m += b * xi[a];
            }
        }
        m
    }

    /// Membership deviation of a matrix (zero on the group).
    pub fn deviation(&self, m: &DMatrix<f64>) -> f64 {
        (self.membership)(m)
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            m: DMatrix::identity(self.matrix_dim, self.matrix_dim),
        }
    }

    /// Wrap a matrix as a group element, enforcing the membership invariant.
    pub fn element(&self, m: DMatrix<f64>) -> Result<GroupElement> {
        let deviation = self.deviation(&m);
        if deviation > self.membership_tol {
            return Err(LprError::NotInGroup {
                deviation,
                tolerance: self.membership_tol,
            });
        }
        Ok(GroupElement { m })
    }

    /// Expand an algebra-valued matrix `V` in the basis `ρ(E_b)` by least
    /// squares, with a residual check.
    pub fn expand_in_basis(&self, v: &DMatrix<f64>) -> Result<DVector<f64>> {
        let n2 = self.matrix_dim * self.matrix_dim;
        let k = self.basis.len();
        let mut a = DMatrix::zeros(n2, k);
        for (b, mat) in self.basis.iter().enumerate() {
            for (idx, val) in mat.iter().enumerate() {
                a[(idx, b)] = *val;
            }
        }
        let rhs = DVector::from_iterator(n2, v.iter().copied());
        let (x, residual) = least_squares(&a, &rhs)?;
        let tol = ADJOINT_RESIDUAL_TOL * rhs.norm().max(1.0);
        if residual > tol {
            return Err(LprError::ExpansionResidual {
                residual,
                tolerance: tol,
            });
        }
        Ok(x)
    }
}

impl std::fmt::Debug for GroupRep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroupRep")
            .field("matrix_dim", &self.matrix_dim)
            .field("algebra_dim", &self.basis.len())
            .field("membership_tol", &self.membership_tol)
            .finish()
    }
}

/// Group exponential `exp(ρ(ξ))`, via a registered closed form when present.
pub fn group_exp(rep: &GroupRep, xi: &DVector<f64>) -> GroupElement {
    let m = match &rep.exp_override {
        Some(f) => f(xi),
        None => matrix_exp(&rep.embed(xi)),
    };
    let deviation = rep.deviation(&m);
    if deviation > rep.membership_tol {
        log::warn!(
            "group_exp produced a matrix with membership deviation {deviation:.3e}; \
             the representation and membership test are likely inconsistent"
        );
    }
    GroupElement { m }
}

/// Adjoint matrix `A^b_a(g)` defined by `ρ(g) ρ(E_a) ρ(g)⁻¹ = A^b_a ρ(E_b)`,
/// extracted by least squares in the representation basis (or a registered
/// closed form). Row index is the upper index `b`.
pub fn adjoint_matrix(
    rep: &GroupRep,
    alg: &LieAlgebraSpec,
    g: &GroupElement,
) -> Result<DMatrix<f64>> {
    if let Some(f) = &rep.adjoint_override {
        return Ok(f(g));
    }
    let k = alg.dim();
    let g_inv = g.inverse()?;
    let mut a = DMatrix::zeros(k, k);
    for col in 0..k {
        let conj = g.matrix() * rep.basis_matrix(col) * g_inv.matrix();
        let coeffs = rep.expand_in_basis(&conj)?;
        a.set_column(col, &coeffs);
    }
    Ok(a)
}

/// `dexpinv` for the left-trivialized convention `ϑ(ġ) = λ`, truncated at the
/// double bracket, which is sufficient for a 4th-order method:
/// `Θ̇ = λ + ½[Θ, λ] + 1/12 [Θ, [Θ, λ]]`.
fn dexpinv_trunc(
    alg: &LieAlgebraSpec,
    theta: &DVector<f64>,
    lambda: &DVector<f64>,
) -> Result<DVector<f64>> {
    let b1 = alg.bracket(theta, lambda)?;
    let b2 = alg.bracket(theta, &b1)?;
    Ok(lambda + b1 * 0.5 + b2 * (1.0 / 12.0))
}

/// One RKMK4 step for `ϑ(ġ) = λ(t)` from λ sampled at the three classical
/// stage abscissae `t`, `t + dt/2`, `t + dt`.
pub(crate) fn rkmk4_from_samples(
    rep: &GroupRep,
    alg: &LieAlgebraSpec,
    g: &GroupElement,
    dt: f64,
    lam0: &DVector<f64>,
    lam_half: &DVector<f64>,
    lam1: &DVector<f64>,
) -> Result<GroupElement> {
    let u1 = lam0.clone();
    let u2 = dexpinv_trunc(alg, &(&u1 * (0.5 * dt)), lam_half)?;
    let u3 = dexpinv_trunc(alg, &(&u2 * (0.5 * dt)), lam_half)?;
    let u4 = dexpinv_trunc(alg, &(&u3 * dt), lam1)?;
    let theta = (u1 + u2 * 2.0 + u3 * 2.0 + u4) * (dt / 6.0);
    let step = group_exp(rep, &theta);
    Ok(g.mul(&step))
}

/// Advance `ϑ(ġ(t)) = λ(t)` one step of size `dt` with a 4th-order
/// Runge-Kutta-Munthe-Kaas method; membership is structural because the
/// update is a product of group exponentials.
pub fn step_group_ode<F>(
    rep: &GroupRep,
    alg: &LieAlgebraSpec,
    g: &GroupElement,
    mut lambda: F,
    t: f64,
    dt: f64,
) -> Result<GroupElement>
where
    F: FnMut(f64) -> Result<DVector<f64>>,
{
    if dt <= 0.0 {
        return Err(LprError::Precondition("step size must be positive".into()));
    }
    let lam0 = lambda(t)?;
    let lam_half = lambda(t + 0.5 * dt)?;
    let lam1 = lambda(t + dt)?;
    rkmk4_from_samples(rep, alg, g, dt, &lam0, &lam_half, &lam1)
}

/// Joint MK update of the group factor given λ sampled at the four stage
/// states of a classical RK4 sweep over the reduced variables.
pub(crate) fn rkmk4_joint_theta(
    alg: &LieAlgebraSpec,
    dt: f64,
    lam: [&DVector<f64>; 4],
) -> Result<DVector<f64>> {
    let u1 = lam[0].clone();
    let u2 = dexpinv_trunc(alg, &(&u1 * (0.5 * dt)), lam[1])?;
    let u3 = dexpinv_trunc(alg, &(&u2 * (0.5 * dt)), lam[2])?;
    let u4 = dexpinv_trunc(alg, &(&u3 * dt), lam[3])?;
    Ok((u1 + u2 * 2.0 + u3 * 2.0 + u4) * (dt / 6.0))
}

/// Coordinates of `g⁻¹ ġ` in the algebra basis, for a velocity given as an
/// ambient matrix `ġ`.
pub fn maurer_cartan_coords(
    rep: &GroupRep,
    g: &GroupElement,
    gdot: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let (body, _cond) = solve_matrix_with_cond(g.matrix(), gdot, "group element")?;
    rep.expand_in_basis(&body)
}
