//! Local trivialization `U×G` of the configuration bundle: the principal
//! connection coefficients `γ^a_i(x)` and the derived bracket coefficients
//! `Υ^b_{ia}` and curvature `K^a_{ij}` that enter the reduced equations.

use nalgebra::{DMatrix, DVector};

use crate::error::{LprError, Result};
use crate::lie_core::LieAlgebraSpec;
use crate::numeric::Tensor3;

type GammaFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type DGammaFn = Box<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync>;

/// Connection coefficients on a trivialized chart. `gamma(x)` is the `k×m`
/// matrix `γ^a_i(x)` (row = algebra index, column = base index); it depends on
/// base coordinates only, by construction of the type.
pub struct BundleChart {
    base_dim: usize,
    fiber_dim: usize,
    gamma: GammaFn,
    dgamma: Option<DGammaFn>,
}

impl BundleChart {
    pub fn new(base_dim: usize, fiber_dim: usize, gamma: GammaFn) -> Self {
        Self {
            base_dim,
            fiber_dim,
            gamma,
            dgamma: None,
        }
    }

    /// Chart with the trivial connection `γ = 0`.
    pub fn trivial(base_dim: usize, fiber_dim: usize) -> Self {
        Self::new(
            base_dim,
            fiber_dim,
            Box::new(move |_| DMatrix::zeros(fiber_dim, base_dim)),
        )
    }

    /// Attach analytic derivatives `∂γ/∂x^j` (one `k×m` matrix per `j`).
    pub fn with_dgamma(mut self, dgamma: DGammaFn) -> Self {
        self.dgamma = Some(dgamma);
        self
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    /// `γ^a_i(x)` as a `k×m` matrix.
    pub fn gamma(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_x(x)?;
        Ok((self.gamma)(x))
    }

    /// `∂γ^a_i/∂x^j`, analytic when supplied, otherwise central differences.
    pub fn dgamma(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        self.check_x(x)?;
        if let Some(f) = &self.dgamma {
            return Ok(f(x));
        }
        let mut out = Vec::with_capacity(self.base_dim);
        for j in 0..self.base_dim {
            let h = 1e-6f64.max(1e-6 * x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            out.push(((self.gamma)(&xp) - (self.gamma)(&xm)) / (2.0 * h));
        }
        Ok(out)
    }

    fn check_x(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.base_dim {
            return Err(LprError::DimensionMismatch {
                what: "base point",
                expected: self.base_dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Debug for BundleChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BundleChart")
            .field("base_dim", &self.base_dim)
            .field("fiber_dim", &self.fiber_dim)
            .field("analytic_dgamma", &self.dgamma.is_some())
            .finish()
    }
}

/// Bracket coefficients `Υ^b_{ia} = −γ^c_i C^b_{ca}`, indexed `get(b, i, a)`.
pub fn upsilon(chart: &BundleChart, alg: &LieAlgebraSpec, x: &DVector<f64>) -> Result<Tensor3> {
    let k = alg.dim();
    let m = chart.base_dim();
    let gamma = chart.gamma(x)?;
    let mut ups = Tensor3::zeros(k, m, k);
    for b in 0..k {
        for i in 0..m {
            for a in 0..k {
                let mut acc = 0.0;
                for c in 0..k {
                    acc -= gamma[(c, i)] * alg.structure_constant(b, c, a);
                }
                ups.set(b, i, a, acc);
            }
        }
    }
    Ok(ups)
}

/// Curvature coefficients of the connection, defined by
/// `[X_i, X_j] = K^a_{ij} Ê_a` and computed as
/// `K^a_{ij} = ∂γ^a_i/∂x^j − ∂γ^a_j/∂x^i + C^a_{bc} γ^b_i γ^c_j`,
/// indexed `get(a, i, j)` and antisymmetric in `(i, j)`.
pub fn curvature(chart: &BundleChart, alg: &LieAlgebraSpec, x: &DVector<f64>) -> Result<Tensor3> {
    let k = alg.dim();
    let m = chart.base_dim();
    let gamma = chart.gamma(x)?;
    let dgamma = chart.dgamma(x)?;
    let mut kk = Tensor3::zeros(k, m, m);
    for a in 0..k {
        for i in 0..m {
            for j in 0..m {
                let mut acc = dgamma[j][(a, i)] - dgamma[i][(a, j)];
                for b in 0..k {
                    for c in 0..k {
                        acc += alg.structure_constant(a, b, c) * gamma[(b, i)] * gamma[(c, j)];
                    }
                }
                kk.set(a, i, j, acc);
            }
        }
    }
    Ok(kk)
}
