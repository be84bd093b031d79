use thiserror::Error;

/// Errors raised by the filtering routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} is not symmetric positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("{what} is not symmetric positive semidefinite (smallest eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { what: &'static str, eigenvalue: f64 },

    #[error("{what} is not symmetric")]
    NotSymmetric { what: &'static str },

    #[error("degenerate innovation covariance: eigenvalue {eigenvalue:e} gives condition number above 1e12")]
    DegenerateInnovation { eigenvalue: f64 },

    #[error("measurement function returned a non-finite value at probe point {point:?}")]
    NonFiniteEvaluation { point: Vec<f64> },

    #[error("moment engine inconsistency: nonlinearity eigenvalue {eigenvalue:e} is below the clamping floor")]
    EngineInconsistency { eigenvalue: f64 },

    #[error("sequential update requires conditionally independent elements (diagonal noise covariance)")]
    CorrelatedNoise,

    #[error("quadrature budget exceeded: {order}^{dim} nodes is more than {budget}; use a smaller order")]
    QuadratureBudget {
        order: usize,
        dim: usize,
        budget: usize,
    },

    #[error("grid engine supports state dimension up to {max}, got {dim}; use a quadrature engine instead")]
    GridDimension { dim: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("run {run} failed: {source}")]
    RunFailed {
        run: usize,
        #[source]
        source: Box<FilterError>,
    },
}

pub type Result<T> = core::result::Result<T, FilterError>;
