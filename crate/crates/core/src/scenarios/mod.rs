//! Benchmark scenarios, a dense-grid reference posterior, and the Monte Carlo
//! harness that produces error tables and threshold sweeps.

mod grid_truth;
mod metrics;
mod models;
mod tracking;

pub use grid_truth::{grid_truth_posterior, GridDensity, MAX_TRUTH_DIM};
pub use metrics::{compensated_sum, mean_and_std_error, paired_difference, percent_delta, MetricsRow, MonteCarloResult};
pub use models::{
    example1_draw, example1_model, example2_model, quadratic_model, range_measurement,
    trig_measurement, BEACONS, EXAMPLE2_PRIOR_VARIANCE, EXAMPLE2_RANGES,
};
pub use tracking::{
    default_sweep_limits, eta_sweep, rows_of, run_monte_carlo, RunData, Scenario, ScenarioParams,
    TruthDraw,
    DEFAULT_RUNS, DEFAULT_SEED, DEFAULT_STEPS,
};
