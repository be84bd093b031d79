//! Small dense helpers on top of nalgebra used throughout the filters.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{FilterError, Result};
use crate::scalar::Scalar;

/// Relative tolerance used for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalue floor, relative to the trace, below which a matrix is not PSD.
pub const PSD_FLOOR: f64 = 1e-10;

pub fn symmetrize<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

pub fn is_symmetric<T: Scalar>(m: &DMatrix<T>, rel_tol: T) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(T::one());
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Vec<T> {
    let mut ev: Vec<T> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

/// Checks symmetry and positive semidefiniteness with the trace-relative floor.
pub fn check_psd<T: Scalar>(m: &DMatrix<T>, what: &'static str) -> Result<()> {
    if !is_symmetric(m, T::lit(SYMMETRY_TOL)) {
        return Err(FilterError::NotSymmetric { what });
    }
    if m.nrows() == 0 {
        return Ok(());
    }
    let min = sym_eigenvalues(m)[0];
    let floor = -T::lit(PSD_FLOOR) * m.trace().abs();
    if !min.is_finite_value() || min < floor {
        return Err(FilterError::NotPositiveSemidefinite {
            what,
            eigenvalue: min.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub fn cholesky<T: Scalar>(m: &DMatrix<T>, what: &'static str) -> Result<Cholesky<T, Dyn>> {
    if !m.is_square() {
        return Err(FilterError::DimensionMismatch {
            context: what,
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if !is_symmetric(m, T::lit(SYMMETRY_TOL)) {
        return Err(FilterError::NotSymmetric { what });
    }
    Cholesky::new(symmetrize(m)).ok_or(FilterError::NotPositiveDefinite { what })
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = m`.
pub fn cholesky_factor<T: Scalar>(m: &DMatrix<T>, what: &'static str) -> Result<DMatrix<T>> {
    Ok(cholesky(m, what)?.l())
}

/// Solves `L X = B` for lower-triangular `L`.
pub fn solve_lower<T: Scalar>(l: &DMatrix<T>, b: &DMatrix<T>, what: &'static str) -> Result<DMatrix<T>> {
    l.solve_lower_triangular(b)
        .ok_or(FilterError::NotPositiveDefinite { what })
}

pub fn inverse_lower<T: Scalar>(l: &DMatrix<T>, what: &'static str) -> Result<DMatrix<T>> {
    solve_lower(l, &DMatrix::identity(l.nrows(), l.nrows()), what)
}

pub fn all_finite<T: Scalar>(v: &DVector<T>) -> bool {
    v.iter().all(|x| x.is_finite_value())
}

pub fn to_f64_vec<T: Scalar>(v: &DVector<T>) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

pub(crate) fn expect_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(FilterError::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
