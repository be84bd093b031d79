//! Nonlinear Gaussian filtering with partitioned measurement updates.
//!
//! The crate computes Gaussian filter updates from interchangeable moment
//! engines ([`engines`]), measures how badly the Gaussian approximation fits a
//! measurement with a closed-form joint KL divergence ([`nonlinearity`]),
//! decorrelates measurements so the most linear combinations come first
//! ([`decorrelate`]), and applies them in parts ([`partition`]). The
//! [`scenarios`] module holds the range-beacon tracking benchmarks and a dense
//! grid reference posterior.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

pub mod decorrelate;
pub mod engines;
pub mod error;
pub mod gauss;
pub mod linalg;
pub mod nonlinearity;
pub mod partition;
pub mod scalar;
pub mod scenarios;

pub use decorrelate::{build_transform, matrix_sqrt, DecorrelationResult};
pub use engines::{EngineKind, MomentEngine, SigmaPointSet};
pub use error::{FilterError, Result};
pub use gauss::{
    gaussian_kld, ggf_update, kf_predict, GaussianDensity, LinearGaussianTransition,
    MeasurementFn, MeasurementModel, MomentTriple,
};
pub use nonlinearity::{ekf2_measure, kld_measure, nonlinearity_report, upsilon, NonlinearityReport};
pub use partition::{
    full_update, klpukf_update, sequential_update, IterationRecord, PartitionTrace, Strategy,
    TransformedModel,
};
pub use scalar::Scalar;

pub type Gaussian = GaussianDensity<f64>;
pub type Gaussian32 = GaussianDensity<f32>;
pub type Measurement = MeasurementModel<f64>;
pub type Moments = MomentTriple<f64>;
pub type Transition = LinearGaussianTransition<f64>;
pub type Engine = MomentEngine<f64>;
pub type Engine32 = MomentEngine<f32>;
pub type Report = NonlinearityReport<f64>;
pub type Decorrelation = DecorrelationResult<f64>;
pub type Trace = PartitionTrace<f64>;
