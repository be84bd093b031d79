//! Measurement decorrelation transform.
//!
//! With `R = √R √Rᵀ` (Cholesky) and the eigendecomposition
//! `U Λ Uᵀ = √R⁻¹ Υ √R⁻ᵀ` (Λ ascending), the transform `D = Uᵀ √R⁻¹` gives
//! `D R Dᵀ = I` and `D Υ Dᵀ = Λ`, so transformed elements are conditionally
//! independent and ordered from most to least linear.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{FilterError, Result};
use crate::linalg::{self, expect_dim, symmetrize};
use crate::scalar::Scalar;

/// Whitened eigenvalues with magnitude below this (relative to the largest
/// magnitude, floored at one) are treated as exact zeros.
pub const ZERO_EIGEN_TOL: f64 = 1e-12;
/// Negative whitened eigenvalues below `-NEGATIVE_EIGEN_FLOOR · d` are rejected
/// rather than clamped.
pub const NEGATIVE_EIGEN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DecorrelationResult<T: Scalar> {
    /// `D = Uᵀ √R⁻¹`.
    pub transform: DMatrix<T>,
    /// Diagonal of `D Υ Dᵀ`, ascending and clamped at zero.
    pub eigenvalues: Vec<T>,
    /// Lower-triangular `√R`.
    pub noise_sqrt: DMatrix<T>,
    /// Number of negative eigenvalues that were clamped to zero.
    pub clamped_count: usize,
}

/// Cholesky square root `L` with `L Lᵀ = R`.
pub fn matrix_sqrt<T: Scalar>(r: &DMatrix<T>) -> Result<DMatrix<T>> {
    linalg::cholesky_factor(r, "noise covariance")
}

/// Flips `v` so its largest-magnitude entry (lowest index on ties) is positive.
fn canonical_sign<T: Scalar>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < T::zero()) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Clamps whitened eigenvalues, returning the cleaned values and the clamp count.
pub(crate) fn clamp_eigenvalues<T: Scalar>(raw: &[T]) -> Result<(Vec<T>, usize)> {
    let d = raw.len();
    let scale = raw.iter().fold(T::one(), |m, x| m.max(x.abs()));
    let zero_tol = T::lit(ZERO_EIGEN_TOL) * scale;
    let floor = -T::lit(NEGATIVE_EIGEN_FLOOR) * T::from_count(d.max(1));
    let mut clamped = 0;
    let mut out = Vec::with_capacity(d);
    for &x in raw {
        if !x.is_finite_value() {
            return Err(FilterError::EngineInconsistency {
                eigenvalue: x.to_f64_lossy(),
            });
        }
        if x < floor {
            return Err(FilterError::EngineInconsistency {
                eigenvalue: x.to_f64_lossy(),
            });
        }
        if x < T::zero() {
            clamped += 1;
            out.push(T::zero());
        } else if x <= zero_tol {
            out.push(T::zero());
        } else {
            out.push(x);
        }
    }
    Ok((out, clamped))
}

/// Builds the decorrelation transform for nonlinearity `upsilon` and noise `noise_cov`.
pub fn build_transform<T: Scalar>(
    upsilon: &DMatrix<T>,
    noise_cov: &DMatrix<T>,
) -> Result<DecorrelationResult<T>> {
    let d = noise_cov.nrows();
    expect_dim("nonlinearity matrix rows", d, upsilon.nrows())?;
    expect_dim("nonlinearity matrix columns", d, upsilon.ncols())?;
    let noise_sqrt = matrix_sqrt(noise_cov)?;
    let sqrt_inv = linalg::inverse_lower(&noise_sqrt, "noise covariance")?;
    let whitened = symmetrize(&(&sqrt_inv * upsilon * sqrt_inv.transpose()));
    let eig = SymmetricEigen::new(whitened);

    let mut order: Vec<usize> = (0..d).collect();
    // Stable sort keeps degenerate eigenvalues in solver order.
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let raw: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let (eigenvalues, clamped_count) = clamp_eigenvalues(&raw)?;

    // Rows of Uᵀ are the sorted, sign-normalized eigenvectors.
    let mut u_t = DMatrix::zeros(d, d);
    for (row, &i) in order.iter().enumerate() {
        let mut v: Vec<T> = eig.eigenvectors.column(i).iter().copied().collect();
        canonical_sign(&mut v);
        for (col, x) in v.into_iter().enumerate() {
            u_t[(row, col)] = x;
        }
    }
    Ok(DecorrelationResult {
        transform: u_t * sqrt_inv,
        eigenvalues,
        noise_sqrt,
        clamped_count,
    })
}
