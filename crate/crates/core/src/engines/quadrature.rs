//! Sigma-point and tensor-product quadrature engines.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::sigma::SigmaPointSet;
use crate::error::{FilterError, Result};
use crate::gauss::{GaussianDensity, MomentTriple};
use crate::scalar::Scalar;

/// Upper bound on the number of tensor-product Gauss–Hermite nodes.
pub const GAUSS_HERMITE_BUDGET: usize = 1_000_000;

/// Scaled unscented point set with `2n + 1` points.
///
/// `λ = α²(n + κ) − n`, points `0, ±√(n + λ) eⱼ`, mean weights `λ/(n+λ)` and
/// `1/(2(n+λ))`; the center covariance weight adds `1 − α² + β`.
pub fn unscented_set<T: Scalar>(n: usize, alpha: T, beta: T, kappa: T) -> Result<SigmaPointSet<T>> {
    let nf = T::from_count(n);
    let spread = alpha * alpha * (nf + kappa);
    if !(spread > T::zero()) || !spread.is_finite_value() {
        return Err(FilterError::InvalidParameter(format!(
            "unscented scaling α²(n+κ) must be positive, got {spread}"
        )));
    }
    let lambda = spread - nf;
    let wm0 = lambda / spread;
    let wc0 = wm0 + T::one() - alpha * alpha + beta;
    let side = T::one() / (T::lit(2.0) * spread);
    Ok(SigmaPointSet::symmetric(n, spread.sqrt(), Some((wm0, wc0)), side))
}

/// Default unscented `κ = 3 − n`.
pub fn default_kappa<T: Scalar>(n: usize) -> T {
    T::lit(3.0) - T::from_count(n)
}

pub fn unscented_moments<T: Scalar, F>(
    prior: &GaussianDensity<T>,
    h: &F,
    d: usize,
    alpha: T,
    beta: T,
    kappa: T,
) -> Result<MomentTriple<T>>
where
    F: Fn(&DVector<T>) -> DVector<T> + ?Sized,
{
    unscented_set(prior.dim(), alpha, beta, kappa)?.moments(prior, |x| h(x), d)
}

/// Third-degree spherical-radial cubature set: `2n` points `±√n eⱼ`, weights `1/(2n)`.
pub fn cubature_set<T: Scalar>(n: usize) -> SigmaPointSet<T> {
    let nf = T::from_count(n);
    SigmaPointSet::symmetric(n, nf.sqrt(), None, T::one() / (T::lit(2.0) * nf))
}

pub fn cubature_moments<T: Scalar, F>(
    prior: &GaussianDensity<T>,
    h: &F,
    d: usize,
) -> Result<MomentTriple<T>>
where
    F: Fn(&DVector<T>) -> DVector<T> + ?Sized,
{
    cubature_set(prior.dim()).moments(prior, |x| h(x), d)
}

/// Nodes and normalized weights of the `order`-point Gauss–Hermite rule for the
/// standard normal weight `exp(−z²/2)`, by the Golub–Welsch eigenvalue method.
pub fn hermite_rule<T: Scalar>(order: usize) -> Result<(Vec<T>, Vec<T>)> {
    if order < 1 {
        return Err(FilterError::InvalidParameter(
            "Gauss-Hermite order must be at least 1".into(),
        ));
    }
    // Jacobi matrix of the probabilists' Hermite recurrence: off-diagonal √k.
    let mut jacobi = DMatrix::<T>::zeros(order, order);
    for k in 1..order {
        let b = T::from_count(k).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(T, T)> = (0..order)
        .map(|i| {
            let v = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v * v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    // Symmetrize about zero; the rule is exactly symmetric.
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let node = (pairs[j].0 - pairs[i].0) * T::lit(0.5);
        let weight = (pairs[j].1 + pairs[i].1) * T::lit(0.5);
        pairs[i] = (-node, weight);
        pairs[j] = (node, weight);
    }
    if order % 2 == 1 {
        pairs[order / 2].0 = T::zero();
    }
    let total = pairs.iter().fold(T::zero(), |acc, p| acc + p.1);
    Ok(pairs.into_iter().map(|(x, w)| (x, w / total)).unzip())
}

/// Tensor product of a one-dimensional rule over `n` axes.
pub(crate) fn tensor_set<T: Scalar>(nodes: &[T], weights: &[T], n: usize) -> SigmaPointSet<T> {
    let m = nodes.len();
    let count = m.pow(n as u32);
    let mut unit_points = DMatrix::zeros(n, count);
    let mut w = vec![T::one(); count];
    for idx in 0..count {
        let mut rest = idx;
        for axis in 0..n {
            let k = rest % m;
            rest /= m;
            unit_points[(axis, idx)] = nodes[k];
            w[idx] *= weights[k];
        }
    }
    SigmaPointSet {
        unit_points,
        mean_weights: w.clone(),
        cov_weights: w,
    }
}

pub fn gauss_hermite_set<T: Scalar>(n: usize, order: usize) -> Result<SigmaPointSet<T>> {
    if order < 2 {
        return Err(FilterError::InvalidParameter(format!(
            "Gauss-Hermite order must be at least 2, got {order}"
        )));
    }
    let within_budget = u32::try_from(n)
        .ok()
        .and_then(|e| order.checked_pow(e))
        .is_some_and(|c| c <= GAUSS_HERMITE_BUDGET);
    if !within_budget {
        return Err(FilterError::QuadratureBudget {
            order,
            dim: n,
            budget: GAUSS_HERMITE_BUDGET,
        });
    }
    let (nodes, weights) = hermite_rule::<T>(order)?;
    Ok(tensor_set(&nodes, &weights, n))
}

pub fn gauss_hermite_moments<T: Scalar, F>(
    prior: &GaussianDensity<T>,
    h: &F,
    d: usize,
    order: usize,
) -> Result<MomentTriple<T>>
where
    F: Fn(&DVector<T>) -> DVector<T> + ?Sized,
{
    gauss_hermite_set(prior.dim(), order)?.moments(prior, |x| h(x), d)
}
