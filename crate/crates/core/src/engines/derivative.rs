//! Derivative-based engines: first-order linearization and the numerical
//! second-order (central difference) engine.
//!
//! Both work in prior-whitened coordinates `x = μ + L z`, which makes the finite
//! difference steps independent of the prior scale.

use nalgebra::{DMatrix, DVector};

use super::sigma::probe;
use crate::error::{FilterError, Result};
use crate::gauss::{GaussianDensity, MomentTriple};
use crate::linalg::{self, symmetrize};
use crate::scalar::Scalar;

pub const DEFAULT_JACOBIAN_STEP: f64 = 1e-5;
pub const DEFAULT_SECOND_ORDER_STEP: f64 = 1.732_050_807_568_877_2;

/// Finite-difference derivatives of `g(z) = h(μ + L z)` at `z = 0`.
#[derive(Debug, Clone)]
pub struct WhitenedDerivatives<T: Scalar> {
    pub value: DVector<T>,
    /// d×n Jacobian with respect to `z`.
    pub jacobian: DMatrix<T>,
    /// One n×n Hessian per output element, with respect to `z`. Empty for first order.
    pub hessians: Vec<DMatrix<T>>,
    pub chol_l: DMatrix<T>,
    pub evaluations: usize,
}

fn check_step<T: Scalar>(step: T) -> Result<()> {
    if step > T::zero() && step.is_finite_value() {
        Ok(())
    } else {
        Err(FilterError::InvalidParameter(format!(
            "finite difference step must be positive, got {step}"
        )))
    }
}

/// Central-difference derivatives. With `second_order` the Hessians are estimated
/// from axis probes `±s eⱼ` and pairwise-diagonal probes `±s (eⱼ + eₖ)`.
pub fn whitened_derivatives<T: Scalar, F>(
    prior: &GaussianDensity<T>,
    h: &F,
    d: usize,
    step: T,
    second_order: bool,
) -> Result<WhitenedDerivatives<T>>
where
    F: Fn(&DVector<T>) -> DVector<T> + ?Sized,
{
    check_step(step)?;
    let n = prior.dim();
    let l = linalg::cholesky_factor(prior.cov(), "prior covariance")?;
    let at = |z: &DVector<T>| -> Result<DVector<T>> { probe(h, &(prior.mean() + &l * z), d) };

    let zero = DVector::zeros(n);
    let g0 = at(&zero)?;
    let mut evaluations = 1;
    let two = T::lit(2.0);
    let mut jacobian = DMatrix::zeros(d, n);
    let mut hessians = vec![DMatrix::zeros(n, n); if second_order { d } else { 0 }];
    for j in 0..n {
        let mut e = zero.clone();
        e[j] = step;
        let plus = at(&e)?;
        let minus = at(&(-&e))?;
        evaluations += 2;
        jacobian.set_column(j, &((&plus - &minus) / (two * step)));
        if second_order {
            let curv = (&plus + &minus - &g0 * two) / (step * step);
            for (i, hess) in hessians.iter_mut().enumerate() {
                hess[(j, j)] = curv[i];
            }
        }
    }
    if second_order {
        for j in 0..n {
            for k in (j + 1)..n {
                let mut u = zero.clone();
                u[j] = step;
                u[k] = step;
                let plus = at(&u)?;
                let minus = at(&(-&u))?;
                evaluations += 2;
                // uᵀHu / s² = H_jj + H_kk + 2 H_jk
                let curv = (&plus + &minus - &g0 * two) / (step * step);
                for (i, hess) in hessians.iter_mut().enumerate() {
                    let off = (curv[i] - hess[(j, j)] - hess[(k, k)]) / two;
                    hess[(j, k)] = off;
                    hess[(k, j)] = off;
                }
            }
        }
    }
    Ok(WhitenedDerivatives {
        value: g0,
        jacobian,
        hessians,
        chol_l: l,
        evaluations,
    })
}

/// Linearization moments: `ŷ = h(μ)`, `Φ = P Aᵀ`, `Σ = A P Aᵀ` with a numerical
/// Jacobian `A`.
pub fn first_order_moments<T: Scalar, F>(
    prior: &GaussianDensity<T>,
    h: &F,
    d: usize,
    step: T,
) -> Result<MomentTriple<T>>
where
    F: Fn(&DVector<T>) -> DVector<T> + ?Sized,
{
    let der = whitened_derivatives(prior, h, d, step, false)?;
    let jz = &der.jacobian;
    Ok(MomentTriple {
        y_hat: der.value,
        cross_cov: &der.chol_l * jz.transpose(),
        meas_cov: symmetrize(&(jz * jz.transpose())),
    })
}

/// Second-order moments from numerically estimated Jacobian and Hessians.
pub fn numerical_second_order_moments<T: Scalar, F>(
    prior: &GaussianDensity<T>,
    h: &F,
    d: usize,
    step: T,
) -> Result<MomentTriple<T>>
where
    F: Fn(&DVector<T>) -> DVector<T> + ?Sized,
{
    let der = whitened_derivatives(prior, h, d, step, true)?;
    let jz = &der.jacobian;
    let half = T::lit(0.5);
    // In whitened coordinates P = I, so tr(Hᵢ P) = tr(Hᵢ) and tr(Hᵢ P Hⱼ P) = tr(Hᵢ Hⱼ).
    let mut y_hat = der.value.clone();
    for (i, hess) in der.hessians.iter().enumerate() {
        y_hat[i] += half * hess.trace();
    }
    let mut meas_cov = jz * jz.transpose();
    for i in 0..d {
        for j in 0..d {
            meas_cov[(i, j)] += half * (&der.hessians[i] * &der.hessians[j]).trace();
        }
    }
    Ok(MomentTriple {
        y_hat,
        cross_cov: &der.chol_l * jz.transpose(),
        meas_cov: symmetrize(&meas_cov),
    })
}

/// Hessians of each measurement element in state coordinates, `H = L⁻ᵀ H_z L⁻¹`.
pub fn numerical_hessians<T: Scalar, F>(
    prior: &GaussianDensity<T>,
    h: &F,
    d: usize,
    step: T,
) -> Result<Vec<DMatrix<T>>>
where
    F: Fn(&DVector<T>) -> DVector<T> + ?Sized,
{
    let der = whitened_derivatives(prior, h, d, step, true)?;
    let l_inv = linalg::inverse_lower(&der.chol_l, "prior covariance")?;
    Ok(der
        .hessians
        .iter()
        .map(|hz| symmetrize(&(l_inv.transpose() * hz * &l_inv)))
        .collect())
}
