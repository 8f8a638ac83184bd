//! Small dense numerics: finite-difference stencils, linear solves with a
//! condition estimate, a matrix exponential, and a rank-3 tensor container.

use nalgebra::{DMatrix, DVector};

use crate::error::{LprError, Result};

/// Condition number above which solves log a warning.
pub const COND_WARN: f64 = 1e8;

/// Condition number above which a matrix is treated as singular.
pub const COND_SINGULAR: f64 = 1e14;

/// Step scale for 4th-order first-derivative stencils.
pub const FD_FIRST_STEP: f64 = 1e-6;

/// Step scale for 2nd-order second-derivative stencils.
pub const FD_SECOND_STEP: f64 = 1e-4;

/// Dense rank-3 tensor with row-major layout, indexed `(i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Self {
            dims: (d0, d1, d2),
            data: vec![0.0; d0 * d1 * d2],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dims.1 + j) * self.dims.2 + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.data[(i * self.dims.1 + j) * self.dims.2 + k] = value;
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Step size for a first-derivative stencil at coordinate value `x`.
pub fn fd_first_step(x: f64) -> f64 {
    FD_FIRST_STEP * x.abs().max(1.0)
}

/// Step size for a second-derivative stencil at coordinate value `x`.
pub fn fd_second_step(x: f64) -> f64 {
    FD_SECOND_STEP * x.abs().max(1.0)
}

/// 4th-order central difference `f'(x)`.
pub fn central_diff_first<F>(mut f: F, x: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = fd_first_step(x);
    let fm2 = f(x - 2.0 * h)?;
    let fm1 = f(x - h)?;
    let fp1 = f(x + h)?;
    let fp2 = f(x + 2.0 * h)?;
    Ok((fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h))
}

/// 2nd-order central difference `f''(x)` (diagonal second derivative).
pub fn central_diff_second<F>(mut f: F, x: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = fd_second_step(x);
    let fm = f(x - h)?;
    let f0 = f(x)?;
    let fp = f(x + h)?;
    Ok((fm - 2.0 * f0 + fp) / (h * h))
}

/// 2nd-order mixed second derivative `∂²f/∂a∂b` of `f(a, b)`.
pub fn central_diff_mixed<F>(mut f: F, a: f64, b: f64) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let ha = fd_second_step(a);
    let hb = fd_second_step(b);
    let fpp = f(a + ha, b + hb)?;
    let fpm = f(a + ha, b - hb)?;
    let fmp = f(a - ha, b + hb)?;
    let fmm = f(a - ha, b - hb)?;
    Ok((fpp - fpm - fmp + fmm) / (4.0 * ha * hb))
}

/// 2-norm condition number estimate from singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Solve `A x = b` by a pivoted factorization, returning the solution and a
/// condition estimate. Fails when the matrix is numerically singular.
pub fn solve_with_cond(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    what: &'static str,
) -> Result<(DVector<f64>, f64)> {
    let cond = condition_number(a);
    if !cond.is_finite() || cond > COND_SINGULAR {
        return Err(LprError::SingularMatrix { what, cond });
    }
    if cond > COND_WARN {
        log::warn!("{what}: condition number {cond:.3e} exceeds {COND_WARN:.0e}");
    }
    let lu = a.clone().full_piv_lu();
    let x = lu.solve(b).ok_or(LprError::SingularMatrix { what, cond })?;
    Ok((x, cond))
}

/// Solve `A X = B` for a matrix right-hand side with the same checks.
pub fn solve_matrix_with_cond(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    what: &'static str,
) -> Result<(DMatrix<f64>, f64)> {
    let cond = condition_number(a);
    if !cond.is_finite() || cond > COND_SINGULAR {
        return Err(LprError::SingularMatrix { what, cond });
    }
    if cond > COND_WARN {
        log::warn!("{what}: condition number {cond:.3e} exceeds {COND_WARN:.0e}");
    }
    let lu = a.clone().full_piv_lu();
    let x = lu.solve(b).ok_or(LprError::SingularMatrix { what, cond })?;
    Ok((x, cond))
}

/// Least-squares solve of an overdetermined `A x = b` via SVD, returning the
/// solution and the residual norm `‖A x − b‖`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = a.clone().svd(true, true);
    let x = svd.solve(b, 1e-14).map_err(|_| LprError::SingularMatrix {
        what: "least-squares system",
        cond: f64::INFINITY,
    })?;
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
///
/// The argument is scaled until its 1-norm is below 1/4, so the series
/// converges to machine precision in well under 20 terms; the result is then
/// squared back.
pub fn matrix_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scaled = a * 2f64.powi(-(squarings as i32));

    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::identity(n, n);
    for k in 1..=32 {
        term = (&term * &scaled) / k as f64;
        sum += &term;
        if one_norm(&term) < 1e-18 * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Maximum absolute column sum.
pub fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Cubic Hermite interpolation on `[t0, t0 + h]` from endpoint values and
/// derivatives.
pub fn cubic_hermite(
    t0: f64,
    h: f64,
    y0: &DVector<f64>,
    d0: &DVector<f64>,
    y1: &DVector<f64>,
    d1: &DVector<f64>,
    t: f64,
) -> DVector<f64> {
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_derivative_of_exp() {
        let d = central_diff_first(|x| Ok(x.exp()), 0.7).unwrap();
        assert_relative_eq!(d, 0.7f64.exp(), epsilon = 1e-10);
    }

    #[test]
    fn second_derivative_of_cubic() {
        let d = central_diff_second(|x| Ok(x * x * x), 1.3).unwrap();
        assert_relative_eq!(d, 6.0 * 1.3, epsilon = 1e-6);
    }

    #[test]
    fn mixed_derivative_of_product() {
        let d = central_diff_mixed(|a, b| Ok(a * a * b), 0.5, -2.0).unwrap();
        assert_relative_eq!(d, 2.0 * 0.5, epsilon = 1e-6);
    }

    #[test]
    fn exp_of_nilpotent_matrix() {
        // exp([[0, a], [0, 0]]) = [[1, a], [0, 1]]
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        let e = matrix_exp(&a);
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0]);
        assert!((e - expected).norm() < 1e-14);
    }

    #[test]
    fn exp_of_rotation_generator() {
        let t = 1.234_f64;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = matrix_exp(&a);
        let expected = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        assert!((e - expected).norm() < 1e-14);
    }

    #[test]
    fn singular_solve_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(solve_with_cond(&a, &b, "test matrix").is_err());
    }

    #[test]
    fn hermite_reproduces_cubic_exactly() {
        // y(t) = t^3 on [1, 2]; interpolation data from the exact cubic.
        let y = |t: f64| DVector::from_vec(vec![t * t * t]);
        let d = |t: f64| DVector::from_vec(vec![3.0 * t * t]);
        let t = 1.37;
        let out = cubic_hermite(1.0, 1.0, &y(1.0), &d(1.0), &y(2.0), &d(2.0), t);
        assert_relative_eq!(out[0], t * t * t, epsilon = 1e-13);
    }
}
