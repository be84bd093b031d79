//! Measurement update strategies: single-shot, sequential elementwise, and the
//! Kullback-Leibler partitioned update.
//!
//! The partitioned update repeatedly
//!
//! 1. computes moments of the remaining measurement at the current state,
//! 2. builds the decorrelation transform `D` from `Υ`,
//! 3. applies the first `k` transformed elements, where `k` is the largest index
//!    with `½ log(1 + Λₖ) ≤ η_limit` (at least one),
//! 4. keeps the remaining rows of `D` as the next measurement with noise `I`,
//!
//! until every element has been applied.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::engines::MomentEngine;
use crate::error::{FilterError, Result};
use crate::gauss::{ggf_update, GaussianDensity, MeasurementFn, MeasurementModel, MomentTriple};
use crate::nonlinearity::{element_eta, marginal_element_eta, report_from_moments, upsilon, NonlinearityReport};
use crate::scalar::Scalar;

/// How a measurement vector is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Full,
    Sequential,
    Klpukf,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Full, Strategy::Sequential, Strategy::Klpukf];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::Sequential => "sequential",
            Strategy::Klpukf => "klpukf",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| FilterError::InvalidParameter(format!("unknown strategy `{s}`")))
    }
}

/// Measurement `M h(x)` with an accumulated left multiplier `M`.
///
/// Composition is kept as a single matrix prefix so each evaluation costs one
/// base call plus one matrix-vector product, however many passes preceded it.
#[derive(Clone)]
pub struct TransformedModel<T: Scalar> {
    base: MeasurementFn<T>,
    base_dim: usize,
    /// `None` means the identity.
    prefix: Option<DMatrix<T>>,
    value: DVector<T>,
    noise_cov: DMatrix<T>,
}

impl<T: Scalar> fmt::Debug for TransformedModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformedModel")
            .field("prefix", &self.prefix)
            .field("value", &self.value)
            .field("noise_cov", &self.noise_cov)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> TransformedModel<T> {
    pub fn new(model: &MeasurementModel<T>) -> Self {
        Self {
            base: Arc::clone(model.func()),
            base_dim: model.dim(),
            prefix: None,
            value: model.value().clone(),
            noise_cov: model.noise_cov().clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    pub fn value(&self) -> &DVector<T> {
        &self.value
    }

    pub fn noise_cov(&self) -> &DMatrix<T> {
        &self.noise_cov
    }

    /// The accumulated multiplier, `dim × base_dim`.
    pub fn multiplier(&self) -> DMatrix<T> {
        self.prefix
            .clone()
            .unwrap_or_else(|| DMatrix::identity(self.base_dim, self.base_dim))
    }

    pub fn evaluate(&self, x: &DVector<T>) -> DVector<T> {
        let y = (self.base)(x);
        match &self.prefix {
            Some(m) => m * y,
            None => y,
        }
    }

    /// Keeps rows `rows` of `transform` as the next measurement; the transformed
    /// noise is the identity.
    fn restrict(&mut self, transform: &DMatrix<T>, first_row: usize) {
        let rows = transform.nrows() - first_row;
        let tail = transform.rows(first_row, rows).into_owned();
        self.value = &tail * &self.value;
        self.prefix = Some(match &self.prefix {
            Some(m) => &tail * m,
            None => tail,
        });
        self.noise_cov = DMatrix::identity(rows, rows);
    }
}

/// One pass of the partitioned update.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T: Scalar> {
    /// Per-element nonlinearity of the transformed remaining measurement, ascending.
    pub eta_per_element: Vec<T>,
    pub chosen_k: usize,
    /// Applied rows expressed against the original measurement, `k × d`.
    pub applied_rows: DMatrix<T>,
    /// State after this pass.
    pub state: GaussianDensity<T>,
    pub clamped_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTrace<T: Scalar> {
    pub iterations: Vec<IterationRecord<T>>,
}

impl<T: Scalar> PartitionTrace<T> {
    pub fn total_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn applied_elements(&self) -> usize {
        self.iterations.iter().map(|r| r.chosen_k).sum()
    }
}

/// Single-shot update with one moment evaluation.
pub fn full_update<T: Scalar>(
    prior: &GaussianDensity<T>,
    model: &MeasurementModel<T>,
    engine: &MomentEngine<T>,
) -> Result<(GaussianDensity<T>, NonlinearityReport<T>)> {
    let moments = engine.moments(prior, model.func().as_ref(), model.dim())?;
    let posterior = ggf_update(prior, &moments, model.noise_cov(), model.value())?;
    let report = report_from_moments(&moments, prior, model.noise_cov())?;
    Ok((posterior, report))
}

fn require_diagonal<T: Scalar>(model: &MeasurementModel<T>) -> Result<()> {
    if model.has_diagonal_noise() {
        Ok(())
    } else {
        Err(FilterError::CorrelatedNoise)
    }
}

fn element_update<T: Scalar>(
    state: &GaussianDensity<T>,
    model: &MeasurementModel<T>,
    engine: &MomentEngine<T>,
    index: usize,
) -> Result<GaussianDensity<T>> {
    let h = model.func();
    let elem = |x: &DVector<T>| DVector::from_element(1, h(x)[index]);
    let moments = engine.moments(state, &elem, 1)?;
    ggf_update(
        state,
        &moments,
        &DMatrix::from_element(1, 1, model.noise_cov()[(index, index)]),
        &DVector::from_element(1, model.value()[index]),
    )
}

/// Applies conditionally independent elements one at a time in `order`,
/// re-evaluating moments at each partial posterior.
pub fn sequential_update<T: Scalar>(
    prior: &GaussianDensity<T>,
    model: &MeasurementModel<T>,
    engine: &MomentEngine<T>,
    order: &[usize],
) -> Result<GaussianDensity<T>> {
    require_diagonal(model)?;
    let d = model.dim();
    let mut seen = vec![false; d];
    if order.len() != d || !order.iter().all(|&i| i < d && !std::mem::replace(&mut seen[i], true)) {
        return Err(FilterError::InvalidParameter(format!(
            "order {order:?} is not a permutation of 0..{d}"
        )));
    }
    let mut state = prior.clone();
    for &i in order {
        state = element_update(&state, model, engine, i)?;
    }
    Ok(state)
}

/// Elementwise update without decorrelation, picking at each pass the remaining
/// element with the smallest marginal nonlinearity.
pub fn greedy_sequential_update<T: Scalar>(
    prior: &GaussianDensity<T>,
    model: &MeasurementModel<T>,
    engine: &MomentEngine<T>,
) -> Result<(GaussianDensity<T>, Vec<usize>)> {
    require_diagonal(model)?;
    let mut remaining: Vec<usize> = (0..model.dim()).collect();
    let mut applied = Vec::with_capacity(remaining.len());
    let mut state = prior.clone();
    let h = model.func();
    while !remaining.is_empty() {
        let sub = |x: &DVector<T>| {
            let y = h(x);
            DVector::from_iterator(remaining.len(), remaining.iter().map(|&i| y[i]))
        };
        let moments = engine.moments(&state, &sub, remaining.len())?;
        let noise = DMatrix::from_diagonal(&DVector::from_iterator(
            remaining.len(),
            remaining.iter().map(|&i| model.noise_cov()[(i, i)]),
        ));
        let etas = marginal_element_eta(&upsilon(&moments, &state)?, &noise);
        let pick = (0..etas.len())
            .min_by(|&a, &b| etas[a].partial_cmp(&etas[b]).unwrap_or(core::cmp::Ordering::Equal))
            .unwrap_or(0);
        let index = remaining.remove(pick);
        state = element_update(&state, model, engine, index)?;
        applied.push(index);
    }
    Ok((state, applied))
}

/// Number of leading transformed elements to apply: the largest `k` with
/// `ηₖ ≤ η_limit`, or one if none qualifies.
pub fn choose_partition<T: Scalar>(eigenvalues: &[T], eta_limit: T) -> usize {
    let qualifying = eigenvalues
        .iter()
        .take_while(|&&l| element_eta(l) <= eta_limit)
        .count();
    qualifying.max(1).min(eigenvalues.len())
}

/// Partitioned update driven by the KL nonlinearity measure.
pub fn klpukf_update<T: Scalar>(
    prior: &GaussianDensity<T>,
    model: &MeasurementModel<T>,
    engine: &MomentEngine<T>,
    eta_limit: T,
) -> Result<(GaussianDensity<T>, PartitionTrace<T>)> {
    if !(eta_limit >= T::zero()) {
        return Err(FilterError::InvalidParameter(format!(
            "eta limit must be nonnegative, got {eta_limit}"
        )));
    }
    let mut remaining = TransformedModel::new(model);
    let mut state = prior.clone();
    let mut trace = PartitionTrace {
        iterations: Vec::new(),
    };

    while remaining.dim() > 0 {
        let d = remaining.dim();
        let moments = engine.moments(&state, &|x: &DVector<T>| remaining.evaluate(x), d)?;
        let report = report_from_moments(&moments, &state, remaining.noise_cov())?;
        let transform = &report.decorrelation.transform;
        let k = choose_partition(&report.eigenvalues, eta_limit);

        let (next, applied_rows) = if k == d {
            // Applying everything at once is invariant to the transform, so
            // update in the current coordinates.
            let post = ggf_update(&state, &moments, remaining.noise_cov(), remaining.value())?;
            (post, remaining.multiplier())
        } else {
            let head = transform.rows(0, k).into_owned();
            let partial: MomentTriple<T> = moments.transformed(&head);
            let post = ggf_update(
                &state,
                &partial,
                &DMatrix::identity(k, k),
                &(&head * remaining.value()),
            )?;
            (post, &head * remaining.multiplier())
        };

        trace.iterations.push(IterationRecord {
            eta_per_element: report.per_element_eta.clone(),
            chosen_k: k,
            applied_rows,
            state: next.clone(),
            clamped_count: report.clamped_count,
        });
        state = next;
        if k == d {
            break;
        }
        remaining.restrict(transform, k);
    }
    Ok((state, trace))
}
