use serde::{Deserialize, Serialize};

use crate::engines::EngineKind;
use crate::partition::Strategy;

/// Mean position error at one step over a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub engine: EngineKind,
    pub strategy: Strategy,
    /// Threshold used by the partitioned strategy; `None` otherwise.
    pub eta_limit: Option<f64>,
    /// One-based step index.
    pub step: usize,
    pub runs: usize,
    pub mean_error: f64,
    pub std_error: f64,
}

/// Rows plus the per-run errors they summarize (`errors[run][step]`).
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub rows: Vec<MetricsRow>,
    pub errors: Vec<Vec<f64>>,
}

/// Neumaier-compensated sum in index order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl MonteCarloResult {
    pub fn from_runs(
        scenario: &str,
        engine: EngineKind,
        strategy: Strategy,
        eta_limit: Option<f64>,
        errors: Vec<Vec<f64>>,
    ) -> Self {
        let steps = errors.first().map_or(0, Vec::len);
        let rows = (0..steps)
            .map(|s| {
                let column: Vec<f64> = errors.iter().map(|r| r[s]).collect();
                let (mean_error, std_error) = mean_and_std_error(&column);
                MetricsRow {
                    scenario: scenario.to_string(),
                    engine,
                    strategy,
                    eta_limit,
                    step: s + 1,
                    runs: errors.len(),
                    mean_error,
                    std_error,
                }
            })
            .collect();
        Self { rows, errors }
    }

    /// Row for a one-based step.
    pub fn step(&self, step: usize) -> &MetricsRow {
        &self.rows[step - 1]
    }

    pub fn last(&self) -> &MetricsRow {
        self.rows.last().expect("at least one step")
    }

    /// Per-run errors at a one-based step.
    pub fn step_errors(&self, step: usize) -> Vec<f64> {
        self.errors.iter().map(|r| r[step - 1]).collect()
    }
}

/// Mean and standard error of `a − b` over paired runs at a one-based step.
///
/// Strategies run on common random numbers, so the paired difference is the
/// relevant comparison statistic.
pub fn paired_difference(a: &MonteCarloResult, b: &MonteCarloResult, step: usize) -> (f64, f64) {
    let diff: Vec<f64> = a
        .step_errors(step)
        .iter()
        .zip(b.step_errors(step))
        .map(|(x, y)| x - y)
        .collect();
    mean_and_std_error(&diff)
}

/// Percent change of `value` against `baseline`.
pub fn percent_delta(value: f64, baseline: f64) -> f64 {
    100.0 * (value - baseline) / baseline
}
