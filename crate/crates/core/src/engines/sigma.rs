use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::gauss::{GaussianDensity, MomentTriple};
use crate::linalg::{self, symmetrize};
use crate::scalar::Scalar;

/// Weighted point set used by the quadrature engines.
///
/// Points are stored in prior-whitened coordinates `z`; the state-space point is
/// `μ + L z` with `L Lᵀ = P`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPointSet<T: Scalar> {
    /// Whitened points, one column per point.
    pub unit_points: DMatrix<T>,
    pub mean_weights: Vec<T>,
    pub cov_weights: Vec<T>,
}

impl<T: Scalar> SigmaPointSet<T> {
    pub fn len(&self) -> usize {
        self.mean_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.unit_points.nrows()
    }

    /// State-space points `μ + L zᵢ`.
    pub fn points(&self, prior: &GaussianDensity<T>, chol_l: &DMatrix<T>) -> Vec<DVector<T>> {
        let mapped = chol_l * &self.unit_points;
        mapped
            .column_iter()
            .map(|c| prior.mean() + c)
            .collect()
    }

    /// Symmetric set `{0, ±scale·eᵢ}` (center included when `center_weight` is given).
    pub(crate) fn symmetric(
        n: usize,
        scale: T,
        center: Option<(T, T)>,
        side_weight: T,
    ) -> Self {
        let offset = usize::from(center.is_some());
        let count = 2 * n + offset;
        let mut unit_points = DMatrix::zeros(n, count);
        let mut mean_weights = vec![side_weight; count];
        let mut cov_weights = vec![side_weight; count];
        if let Some((wm0, wc0)) = center {
            mean_weights[0] = wm0;
            cov_weights[0] = wc0;
        }
        for j in 0..n {
            unit_points[(j, offset + j)] = scale;
            unit_points[(j, offset + n + j)] = -scale;
        }
        Self {
            unit_points,
            mean_weights,
            cov_weights,
        }
    }

    /// Weighted versions of the moment integrals over this point set.
    pub fn moments<F>(&self, prior: &GaussianDensity<T>, h: F, d: usize) -> Result<MomentTriple<T>>
    where
        F: Fn(&DVector<T>) -> DVector<T>,
    {
        let l = linalg::cholesky_factor(prior.cov(), "prior covariance")?;
        weighted_moments(prior, &l, &self.unit_points, &self.mean_weights, &self.cov_weights, h, d)
    }
}

/// Evaluates `h` at a probe point and checks the output.
pub(crate) fn probe<T: Scalar, F>(h: &F, x: &DVector<T>, d: usize) -> Result<DVector<T>>
where
    F: Fn(&DVector<T>) -> DVector<T> + ?Sized,
{
    let y = h(x);
    if y.len() != d {
        return Err(FilterError::DimensionMismatch {
            context: "measurement function output",
            expected: d,
            found: y.len(),
        });
    }
    if !linalg::all_finite(&y) {
        return Err(FilterError::NonFiniteEvaluation {
            point: linalg::to_f64_vec(x),
        });
    }
    Ok(y)
}

/// Shared reduction for every point-based engine. Accumulation runs in fixed
/// column order so repeated calls are bit-identical.
pub(crate) fn weighted_moments<T: Scalar, F>(
    prior: &GaussianDensity<T>,
    chol_l: &DMatrix<T>,
    unit_points: &DMatrix<T>,
    mean_weights: &[T],
    cov_weights: &[T],
    h: F,
    d: usize,
) -> Result<MomentTriple<T>>
where
    F: Fn(&DVector<T>) -> DVector<T>,
{
    let count = unit_points.ncols();
    let mut outputs = DMatrix::zeros(d, count);
    let mapped = chol_l * unit_points;
    for (i, col) in mapped.column_iter().enumerate() {
        let x = prior.mean() + col;
        outputs.set_column(i, &probe(&h, &x, d)?);
    }
    let wm = DVector::from_column_slice(mean_weights);
    let y_hat = &outputs * &wm;
    let mut dev = outputs;
    for mut c in dev.column_iter_mut() {
        c -= &y_hat;
    }
    let mut weighted = dev.clone();
    for (mut c, &w) in weighted.column_iter_mut().zip(cov_weights) {
        c *= w;
    }
    let meas_cov = symmetrize(&(&weighted * dev.transpose()));
    let cross_cov = chol_l * (unit_points * weighted.transpose());
    Ok(MomentTriple {
        y_hat,
        cross_cov,
        meas_cov,
    })
}
