//! Interchangeable approximations of the Gaussian filter moment integrals
//!
//! ```text
//! ŷ = ∫ h(x) p(x) dx
//! Φ = ∫ (x − μ)(h(x) − ŷ)ᵀ p(x) dx
//! Σ = ∫ (h(x) − ŷ)(h(x) − ŷ)ᵀ p(x) dx
//! ```
//!
//! ranging from first-order linearization to a dense-grid reference.

mod derivative;
mod grid;
mod quadrature;
mod sigma;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use derivative::{
    first_order_moments, numerical_hessians, numerical_second_order_moments, whitened_derivatives,
    WhitenedDerivatives, DEFAULT_JACOBIAN_STEP, DEFAULT_SECOND_ORDER_STEP,
};
pub use grid::{default_points_per_axis, grid_moments, grid_rule, grid_set, DEFAULT_HALF_WIDTH, MAX_GRID_DIM};
pub use quadrature::{
    cubature_moments, cubature_set, default_kappa, gauss_hermite_moments, gauss_hermite_set,
    hermite_rule, unscented_moments, unscented_set, GAUSS_HERMITE_BUDGET,
};
pub use sigma::SigmaPointSet;

use crate::error::{FilterError, Result};
use crate::gauss::{GaussianDensity, MomentTriple};
use crate::scalar::Scalar;

/// Engine identifiers as used on the command line and in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Ekf,
    Nekf2,
    Ukf,
    Ckf,
    Ghq,
    Grid,
}

impl EngineKind {
    pub const ALL: [EngineKind; 6] = [
        EngineKind::Ekf,
        EngineKind::Nekf2,
        EngineKind::Ukf,
        EngineKind::Ckf,
        EngineKind::Ghq,
        EngineKind::Grid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Ekf => "ekf",
            EngineKind::Nekf2 => "nekf2",
            EngineKind::Ukf => "ukf",
            EngineKind::Ckf => "ckf",
            EngineKind::Ghq => "ghq",
            EngineKind::Grid => "grid",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineKind {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self> {
        EngineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| FilterError::InvalidParameter(format!("unknown engine `{s}`")))
    }
}

/// A configured moment engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentEngine<T: Scalar> {
    /// Linearization at the prior mean with a central-difference Jacobian.
    FirstOrder { step: T },
    /// Central-difference second-order engine.
    NumericalSecondOrder { step: T },
    /// Scaled unscented transform; `kappa = None` means `3 − n`.
    Unscented { alpha: T, beta: T, kappa: Option<T> },
    Cubature,
    GaussHermite { order: usize },
    /// Tensor grid; `points_per_axis = None` picks a default by dimension.
    Grid {
        half_width_sigmas: T,
        points_per_axis: Option<usize>,
    },
}

impl<T: Scalar> MomentEngine<T> {
    /// The engine for `kind` with default parameters.
    pub fn with_defaults(kind: EngineKind) -> Self {
        match kind {
            EngineKind::Ekf => MomentEngine::FirstOrder {
                step: T::lit(DEFAULT_JACOBIAN_STEP),
            },
            EngineKind::Nekf2 => MomentEngine::NumericalSecondOrder {
                step: T::lit(DEFAULT_SECOND_ORDER_STEP),
            },
            EngineKind::Ukf => MomentEngine::Unscented {
                alpha: T::one(),
                beta: T::zero(),
                kappa: None,
            },
            EngineKind::Ckf => MomentEngine::Cubature,
            EngineKind::Ghq => MomentEngine::GaussHermite { order: 3 },
            EngineKind::Grid => MomentEngine::Grid {
                half_width_sigmas: T::lit(DEFAULT_HALF_WIDTH),
                points_per_axis: None,
            },
        }
    }

    pub fn kind(&self) -> EngineKind {
        match self {
            MomentEngine::FirstOrder { .. } => EngineKind::Ekf,
            MomentEngine::NumericalSecondOrder { .. } => EngineKind::Nekf2,
            MomentEngine::Unscented { .. } => EngineKind::Ukf,
            MomentEngine::Cubature => EngineKind::Ckf,
            MomentEngine::GaussHermite { .. } => EngineKind::Ghq,
            MomentEngine::Grid { .. } => EngineKind::Grid,
        }
    }

    /// Linearization engines always report zero nonlinearity, so they cannot
    /// steer the partitioned update.
    pub fn measures_nonlinearity(&self) -> bool {
        !matches!(self, MomentEngine::FirstOrder { .. })
    }

    /// Approximates `(ŷ, Φ, Σ)` of a `d`-dimensional `h` under `prior`.
    pub fn moments<F>(&self, prior: &GaussianDensity<T>, h: &F, d: usize) -> Result<MomentTriple<T>>
    where
        F: Fn(&DVector<T>) -> DVector<T> + ?Sized,
    {
        match *self {
            MomentEngine::FirstOrder { step } => first_order_moments(prior, h, d, step),
            MomentEngine::NumericalSecondOrder { step } => {
                numerical_second_order_moments(prior, h, d, step)
            }
            MomentEngine::Unscented { alpha, beta, kappa } => {
                let kappa = kappa.unwrap_or_else(|| default_kappa(prior.dim()));
                unscented_moments(prior, h, d, alpha, beta, kappa)
            }
            MomentEngine::Cubature => cubature_moments(prior, h, d),
            MomentEngine::GaussHermite { order } => gauss_hermite_moments(prior, h, d, order),
            MomentEngine::Grid {
                half_width_sigmas,
                points_per_axis,
            } => {
                let points = points_per_axis.unwrap_or_else(|| default_points_per_axis(prior.dim()));
                grid_moments(prior, h, d, half_width_sigmas, points)
            }
        }
    }
}
