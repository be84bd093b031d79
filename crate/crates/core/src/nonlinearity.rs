//! Nonlinearity of a measurement under the Gaussian filter approximation.
//!
//! The joint KL divergence between the true state/measurement density and the
//! Gaussian approximation implied by the moments has the closed form
//! `η = ½ log|I + R⁻¹ Υ|` with `Υ = Σ − Φᵀ P⁻¹ Φ`. It is evaluated through the
//! whitened symmetric eigenproblem `√R⁻¹ Υ √R⁻ᵀ`, so per-element values
//! `ηᵢ = ½ log(1 + Λᵢ)` sum to the total.

use nalgebra::DMatrix;

use crate::decorrelate::{build_transform, DecorrelationResult};
use crate::error::{FilterError, Result};
use crate::gauss::{GaussianDensity, MomentTriple};
use crate::linalg::{self, expect_dim, symmetrize};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearityReport<T: Scalar> {
    /// Raw (unclamped) `Υ`.
    pub upsilon: DMatrix<T>,
    pub eta_total: T,
    /// Ascending whitened eigenvalues, clamped at zero.
    pub eigenvalues: Vec<T>,
    pub per_element_eta: Vec<T>,
    pub clamped_count: usize,
    pub decorrelation: DecorrelationResult<T>,
}

/// `Υ = Σ − Φᵀ P⁻¹ Φ`, symmetrized. Not clamped.
pub fn upsilon<T: Scalar>(moments: &MomentTriple<T>, prior: &GaussianDensity<T>) -> Result<DMatrix<T>> {
    expect_dim("cross-covariance rows", prior.dim(), moments.cross_cov.nrows())?;
    let l = linalg::cholesky_factor(prior.cov(), "prior covariance")?;
    let w = linalg::solve_lower(&l, &moments.cross_cov, "prior covariance")?;
    Ok(symmetrize(&(&moments.meas_cov - w.transpose() * w)))
}

/// `ηᵢ = ½ log(1 + Λᵢ)`.
pub fn element_eta<T: Scalar>(eigenvalue: T) -> T {
    T::lit(0.5) * eigenvalue.ln_1p()
}

/// Full report: clamped spectrum, per-element and total nonlinearity, and the
/// decorrelation transform that diagonalizes `Υ`.
pub fn nonlinearity_report<T: Scalar>(
    upsilon: &DMatrix<T>,
    noise_cov: &DMatrix<T>,
) -> Result<NonlinearityReport<T>> {
    let decorrelation = build_transform(upsilon, noise_cov)?;
    let per_element_eta: Vec<T> = decorrelation
        .eigenvalues
        .iter()
        .map(|&l| element_eta(l))
        .collect();
    let eta_total = per_element_eta.iter().fold(T::zero(), |a, &b| a + b);
    Ok(NonlinearityReport {
        upsilon: upsilon.clone(),
        eta_total,
        eigenvalues: decorrelation.eigenvalues.clone(),
        per_element_eta,
        clamped_count: decorrelation.clamped_count,
        decorrelation,
    })
}

/// Total nonlinearity `η = ½ log|I + R⁻¹ Υ|`.
pub fn kld_measure<T: Scalar>(upsilon: &DMatrix<T>, noise_cov: &DMatrix<T>) -> Result<T> {
    Ok(nonlinearity_report(upsilon, noise_cov)?.eta_total)
}

/// Report straight from moments.
pub fn report_from_moments<T: Scalar>(
    moments: &MomentTriple<T>,
    prior: &GaussianDensity<T>,
    noise_cov: &DMatrix<T>,
) -> Result<NonlinearityReport<T>> {
    nonlinearity_report(&upsilon(moments, prior)?, noise_cov)
}

/// Nonlinearity of each untransformed element on its own, `½ log(1 + Υᵢᵢ / Rᵢᵢ)`.
pub fn marginal_element_eta<T: Scalar>(upsilon: &DMatrix<T>, noise_cov: &DMatrix<T>) -> Vec<T> {
    (0..upsilon.nrows())
        .map(|i| element_eta((upsilon[(i, i)] / noise_cov[(i, i)]).max(T::zero())))
        .collect()
}

/// Second-order-filter measure `η̂ = Σᵢⱼ (R⁻¹)ᵢⱼ tr(P Hᵢ P Hⱼ)`.
pub fn ekf2_measure<T: Scalar>(
    hessians: &[DMatrix<T>],
    prior_cov: &DMatrix<T>,
    noise_cov: &DMatrix<T>,
) -> Result<T> {
    let d = noise_cov.nrows();
    expect_dim("Hessian count", d, hessians.len())?;
    let r_inv = linalg::cholesky(noise_cov, "noise covariance")?.inverse();
    let ph: Vec<DMatrix<T>> = hessians.iter().map(|h| prior_cov * h).collect();
    let mut total = T::zero();
    for i in 0..d {
        for j in 0..d {
            total += r_inv[(i, j)] * (&ph[i] * &ph[j]).trace();
        }
    }
    if !total.is_finite_value() {
        return Err(FilterError::InvalidParameter("non-finite second-order measure".into()));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn upsilon_examples() {
        let prior = GaussianDensity::scalar(0.0, 1.0).unwrap();
        let exact_square = MomentTriple {
            y_hat: DVector::from_element(1, 1.0),
            cross_cov: DMatrix::zeros(1, 1),
            meas_cov: DMatrix::from_element(1, 1, 2.0),
        };
        assert_eq!(upsilon(&exact_square, &prior).unwrap()[(0, 0)], 2.0);

        let p2 = GaussianDensity::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
        )
        .unwrap();
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, -1.0, 0.5, 3.0]);
        let m = MomentTriple::affine(&p2, &a, &DVector::zeros(3));
        assert!(upsilon(&m, &p2).unwrap().amax() < 1e-13);
    }

    #[test]
    fn kld_measure_examples() {
        assert_eq!(kld_measure(&DMatrix::<f64>::zeros(2, 2), &DMatrix::identity(2, 2)).unwrap(), 0.0);
        assert_relative_eq!(
            kld_measure(&DMatrix::from_element(1, 1, 1.0), &DMatrix::identity(1, 1)).unwrap(),
            0.5 * 2f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn per_element_sum_matches_total_and_determinant() {
        let ups = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let r = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
        let rep = nonlinearity_report(&ups, &r).unwrap();
        let det: f64 = (DMatrix::<f64>::identity(2, 2) + r.clone().try_inverse().unwrap() * &ups).determinant();
        let direct = 0.5 * det.ln();
        assert_relative_eq!(rep.eta_total, direct, epsilon = 1e-12);
        let sum: f64 = rep.per_element_eta.iter().sum();
        assert_relative_eq!(sum, rep.eta_total, epsilon = 1e-15);
    }

    #[test]
    fn ekf2_measure_examples() {
        let p = DMatrix::from_element(1, 1, 1.0);
        let r1 = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(ekf2_measure(&[DMatrix::zeros(1, 1)], &p, &r1).unwrap(), 0.0);
        assert_eq!(ekf2_measure(&[DMatrix::from_element(1, 1, 2.0)], &p, &r1).unwrap(), 4.0);
        let hs = [DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, -2.0)];
        assert_eq!(ekf2_measure(&hs, &p, &DMatrix::identity(2, 2)).unwrap(), 8.0);
        assert!(ekf2_measure(&hs, &p, &DMatrix::zeros(2, 2)).is_err());
    }
}
