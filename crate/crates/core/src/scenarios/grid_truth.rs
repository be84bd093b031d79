//! Dense-grid Bayesian posterior used as ground truth in one and two dimensions.

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::gauss::{GaussianDensity, MeasurementModel};
use crate::linalg;

pub const MAX_TRUTH_DIM: usize = 2;

/// Normalized probability masses on an axis-aligned grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub axes: Vec<Vec<f64>>,
    /// Masses in first-axis-fastest order.
    pub masses: Vec<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GridDensity {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Grid node for a flat index.
    pub fn node(&self, mut index: usize) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.axes.iter().map(|axis| {
                let k = index % axis.len();
                index /= axis.len();
                axis[k]
            }),
        )
    }

    /// Moment-matched Gaussian.
    pub fn gaussian(&self) -> GaussianDensity<f64> {
        GaussianDensity::from_parts(self.mean.clone(), self.cov.clone())
    }

    /// Smallest cell mass `t` such that cells with mass `≥ t` hold at least
    /// `level` of the probability (highest-density region threshold).
    pub fn hpd_threshold(&self, level: f64) -> f64 {
        let mut sorted = self.masses.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
        let mut acc = 0.0;
        for &m in &sorted {
            acc += m;
            if acc >= level {
                return m;
            }
        }
        sorted.last().copied().unwrap_or(0.0)
    }

    /// Nodes on the boundary of the highest-density region containing `level`:
    /// inside cells with at least one axis neighbour outside.
    pub fn hpd_boundary(&self, level: f64) -> Vec<DVector<f64>> {
        let t = self.hpd_threshold(level);
        let sizes: Vec<usize> = self.axes.iter().map(Vec::len).collect();
        let inside = |i: usize| self.masses[i] >= t;
        let mut out = Vec::new();
        for i in 0..self.masses.len() {
            if !inside(i) {
                continue;
            }
            let mut stride = 1;
            let mut boundary = false;
            for &size in &sizes {
                let k = (i / stride) % size;
                if k == 0 || k + 1 == size || !inside(i - stride) || !inside(i + stride) {
                    boundary = true;
                }
                stride *= size;
            }
            if boundary {
                out.push(self.node(i));
            }
        }
        out
    }
}

/// Pointwise prior × likelihood on a grid of `resolution` nodes per axis spanning
/// `μᵢ ± half_width·σᵢ`, normalized to unit mass.
pub fn grid_truth_posterior(
    prior: &GaussianDensity<f64>,
    model: &MeasurementModel<f64>,
    resolution: usize,
    half_width: f64,
) -> Result<GridDensity> {
    let n = prior.dim();
    if n == 0 || n > MAX_TRUTH_DIM {
        return Err(FilterError::GridDimension {
            dim: n,
            max: MAX_TRUTH_DIM,
        });
    }
    if resolution < 2 || !(half_width > 0.0) {
        return Err(FilterError::InvalidParameter(format!(
            "grid truth needs resolution ≥ 2 and positive half width, got {resolution} and {half_width}"
        )));
    }
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let c = prior.mean()[i];
            let s = prior.cov()[(i, i)].sqrt();
            (0..resolution)
                .map(|k| c - half_width * s + 2.0 * half_width * s * k as f64 / (resolution - 1) as f64)
                .collect()
        })
        .collect();

    let prior_chol = linalg::cholesky(prior.cov(), "prior covariance")?;
    let noise_chol = linalg::cholesky(model.noise_cov(), "noise covariance")?;
    let count = resolution.pow(n as u32);
    let mut log_w = Vec::with_capacity(count);
    let mut scratch = GridDensity {
        axes,
        masses: Vec::new(),
        mean: DVector::zeros(n),
        cov: DMatrix::zeros(n, n),
    };
    for i in 0..count {
        let x = scratch.node(i);
        let dx = &x - prior.mean();
        let dy = model.value() - model.evaluate(&x)?;
        let lp = dx.dot(&prior_chol.solve(&dx));
        let ll = dy.dot(&noise_chol.solve(&dy));
        log_w.push(-0.5 * (lp + ll));
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    let masses: Vec<f64> = raw.into_iter().map(|w| w / total).collect();

    let mut mean = DVector::zeros(n);
    for (i, &m) in masses.iter().enumerate() {
        mean += scratch.node(i) * m;
    }
    let mut cov = DMatrix::zeros(n, n);
    for (i, &m) in masses.iter().enumerate() {
        let d = scratch.node(i) - &mean;
        cov += &d * d.transpose() * m;
    }
    scratch.masses = masses;
    scratch.mean = mean;
    scratch.cov = linalg::symmetrize(&cov);
    Ok(scratch)
}
