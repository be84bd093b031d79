//! Dense tensor-grid approximation of the moment integrals, used as a reference
//! engine in low dimensions.

use nalgebra::DVector;

use super::quadrature::tensor_set;
use super::sigma::SigmaPointSet;
use crate::error::{FilterError, Result};
use crate::gauss::{GaussianDensity, MomentTriple};
use crate::scalar::Scalar;

pub const MAX_GRID_DIM: usize = 3;
pub const DEFAULT_HALF_WIDTH: f64 = 8.0;

/// Default resolution per axis for a given state dimension.
pub fn default_points_per_axis(n: usize) -> usize {
    match n {
        0 | 1 => 801,
        2 => 301,
        _ => 81,
    }
}

/// One-dimensional grid rule on `[−w, w]` in whitened units.
///
/// Weights are the renormalized standard normal density at the nodes. The nodes
/// are then rescaled so the discrete rule has unit variance, which removes the
/// truncation bias in the second moment and keeps the engine exact for affine
/// measurement functions.
pub fn grid_rule<T: Scalar>(half_width_sigmas: T, points_per_axis: usize) -> Result<(Vec<T>, Vec<T>)> {
    if points_per_axis < 2 || !(half_width_sigmas > T::zero()) {
        return Err(FilterError::InvalidParameter(format!(
            "grid needs at least 2 points and a positive half width, got {points_per_axis} and {half_width_sigmas}"
        )));
    }
    let w = half_width_sigmas;
    let span = T::from_count(points_per_axis - 1);
    let mut nodes: Vec<T> = (0..points_per_axis)
        .map(|k| -w + T::lit(2.0) * w * T::from_count(k) / span)
        .collect();
    // Mirror so the rule is exactly symmetric.
    for k in 0..points_per_axis / 2 {
        let j = points_per_axis - 1 - k;
        nodes[j] = -nodes[k];
    }
    if points_per_axis % 2 == 1 {
        nodes[points_per_axis / 2] = T::zero();
    }
    let raw: Vec<T> = nodes.iter().map(|&z| (-z * z * T::lit(0.5)).exp()).collect();
    let total = raw.iter().fold(T::zero(), |a, &b| a + b);
    let weights: Vec<T> = raw.into_iter().map(|x| x / total).collect();
    let second = nodes
        .iter()
        .zip(&weights)
        .fold(T::zero(), |acc, (&z, &p)| acc + p * z * z);
    let scale = second.sqrt();
    Ok((nodes.into_iter().map(|z| z / scale).collect(), weights))
}

pub fn grid_set<T: Scalar>(
    n: usize,
    half_width_sigmas: T,
    points_per_axis: usize,
) -> Result<SigmaPointSet<T>> {
    if n > MAX_GRID_DIM {
        return Err(FilterError::GridDimension {
            dim: n,
            max: MAX_GRID_DIM,
        });
    }
    let (nodes, weights) = grid_rule(half_width_sigmas, points_per_axis)?;
    Ok(tensor_set(&nodes, &weights, n))
}

pub fn grid_moments<T: Scalar, F>(
    prior: &GaussianDensity<T>,
    h: &F,
    d: usize,
    half_width_sigmas: T,
    points_per_axis: usize,
) -> Result<MomentTriple<T>>
where
    F: Fn(&DVector<T>) -> DVector<T> + ?Sized,
{
    grid_set(prior.dim(), half_width_sigmas, points_per_axis)?.moments(prior, |x| h(x), d)
}
