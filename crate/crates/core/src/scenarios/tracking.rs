//! Constant-velocity range-beacon tracking benchmark and its Monte Carlo runner.
//!
//! Each run draws an initial truth and filter mean whose difference has
//! covariance `P₀` (see [`TruthDraw`]), propagates the truth with process
//! noise, and measures ranges to the beacons with unit noise at every step. Step 1 updates the
//! initial prior directly; later steps predict first.
//!
//! Randomness comes from per-run ChaCha substreams derived from `(seed, run)`:
//! one stream for truths and measurement noise and a separate one for the
//! random element orders of the sequential strategy, so every strategy sees the
//! same truths and noise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{MetricsRow, MonteCarloResult};
use super::models::{range_measurement, BEACONS};
use crate::engines::MomentEngine;
use crate::error::{FilterError, Result};
use crate::gauss::{kf_predict, GaussianDensity, LinearGaussianTransition, MeasurementFn, MeasurementModel};
use crate::linalg::expect_dim;
use crate::partition::{full_update, klpukf_update, sequential_update, Strategy};

pub const DEFAULT_STEPS: usize = 20;
pub const DEFAULT_RUNS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 2017;

/// How the initial truth relates to the sampled initial filter mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthDraw {
    /// `μ₀ ~ N(m₀, P₀)` and then `x₀ ~ N(μ₀, P₀)`.
    AroundMean,
    /// `x₀ ~ N(m₀, P₀)` drawn independently of `μ₀`.
    Independent,
    /// `x₀ ~ N(m₀, P₀)` and then `μ₀ ~ N(x₀, P₀)`. The estimation error
    /// `μ₀ − x₀` has covariance `P₀` and the truth stays near the beacons.
    #[default]
    MeanAroundTruth,
}

/// Optional overrides for the tracking scenario, as read from a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    /// Center of the initial-mean distribution.
    pub prior_mean: Option<Vec<f64>>,
    /// Row-major initial covariance `P₀`.
    pub prior_cov: Option<Vec<Vec<f64>>>,
    pub beacons: Option<Vec<[f64; 2]>>,
    /// Diagonal of the measurement noise covariance.
    pub noise_diag: Option<Vec<f64>>,
    pub transition: Option<Vec<Vec<f64>>>,
    pub process_cov: Option<Vec<Vec<f64>>>,
    pub steps: Option<usize>,
    pub truth_draw: Option<TruthDraw>,
}

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub prior_mean: DVector<f64>,
    pub prior_cov: DMatrix<f64>,
    pub beacons: Vec<[f64; 2]>,
    pub noise_diag: Vec<f64>,
    pub dynamics: LinearGaussianTransition<f64>,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub truth_draw: TruthDraw,
    prior_sqrt: DMatrix<f64>,
    process_sqrt: DMatrix<f64>,
    func: MeasurementFn<f64>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("prior_mean", &self.prior_mean)
            .field("prior_cov", &self.prior_cov)
            .field("beacons", &self.beacons)
            .field("noise_diag", &self.noise_diag)
            .field("dynamics", &self.dynamics)
            .field("steps", &self.steps)
            .field("runs", &self.runs)
            .field("seed", &self.seed)
            .field("truth_draw", &self.truth_draw)
            .finish_non_exhaustive()
    }
}

/// One simulated route.
#[derive(Debug, Clone, PartialEq)]
pub struct RunData {
    pub initial_mean: DVector<f64>,
    pub truths: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &'static str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    for r in rows {
        expect_dim(what, n, r.len())?;
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Symmetric PSD square root via eigendecomposition; tolerates singular `Q`.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let s = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&s) * eig.eigenvectors.transpose()
}

fn standard_normal(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

fn constant_velocity() -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let f = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    );
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 0.04, 0.04]));
    let p0 = DMatrix::from_diagonal(&DVector::from_vec(vec![12.0, 12.0, 1.0, 1.0]));
    (f, q, p0)
}

impl Scenario {
    /// Four-state constant-velocity tracking with three range beacons.
    pub fn example3(runs: usize, steps: usize, seed: u64) -> Result<Self> {
        Self::from_params(&ScenarioParams {
            steps: Some(steps),
            ..ScenarioParams::default()
        }, runs, seed)
    }

    pub fn from_params(params: &ScenarioParams, runs: usize, seed: u64) -> Result<Self> {
        let (f, q, p0) = constant_velocity();
        let transition = params
            .transition
            .as_deref()
            .map(|r| matrix_from_rows(r, "transition"))
            .transpose()?
            .unwrap_or(f);
        let n = transition.nrows();
        if n < 2 {
            return Err(FilterError::InvalidParameter(
                "tracking state needs at least two position components".into(),
            ));
        }
        let process = params
            .process_cov
            .as_deref()
            .map(|r| matrix_from_rows(r, "process covariance"))
            .transpose()?
            .unwrap_or(q);
        let prior_cov = params
            .prior_cov
            .as_deref()
            .map(|r| matrix_from_rows(r, "prior covariance"))
            .transpose()?
            .unwrap_or(p0);
        let prior_mean = params
            .prior_mean
            .as_ref()
            .map(|v| DVector::from_column_slice(v))
            .unwrap_or_else(|| DVector::zeros(n));
        expect_dim("prior mean", n, prior_mean.len())?;
        expect_dim("prior covariance", n, prior_cov.nrows())?;
        // Validates symmetry / PSD of P₀.
        GaussianDensity::new(prior_mean.clone(), prior_cov.clone())?;
        let beacons = params.beacons.clone().unwrap_or_else(|| BEACONS.to_vec());
        let noise_diag = params
            .noise_diag
            .clone()
            .unwrap_or_else(|| vec![1.0; beacons.len()]);
        expect_dim("noise diagonal", beacons.len(), noise_diag.len())?;
        if beacons.is_empty() || noise_diag.iter().any(|&r| !(r > 0.0)) {
            return Err(FilterError::InvalidParameter(
                "need at least one beacon and positive noise variances".into(),
            ));
        }
        let steps = params.steps.unwrap_or(DEFAULT_STEPS);
        if steps == 0 || runs == 0 {
            return Err(FilterError::InvalidParameter("runs and steps must be at least 1".into()));
        }
        let dynamics = LinearGaussianTransition::new(transition, process)?;
        Ok(Self {
            name: "example3".into(),
            prior_sqrt: psd_sqrt(&prior_cov),
            process_sqrt: psd_sqrt(dynamics.process_cov()),
            func: range_measurement(&beacons),
            prior_mean,
            prior_cov,
            beacons,
            noise_diag,
            dynamics,
            steps,
            runs,
            seed,
            truth_draw: params.truth_draw.unwrap_or_default(),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.prior_mean.len()
    }

    pub fn noise_cov(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.noise_diag))
    }

    fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    /// Truth trajectory and measurements of run `run`.
    pub fn simulate_run(&self, run: usize, seed: u64) -> RunData {
        let n = self.state_dim();
        let d = self.beacons.len();
        let mut rng = Self::rng(seed, 2 * run as u64);
        let first = &self.prior_mean + &self.prior_sqrt * standard_normal(&mut rng, n);
        let (initial_mean, mut x) = match self.truth_draw {
            TruthDraw::AroundMean => {
                let x = &first + &self.prior_sqrt * standard_normal(&mut rng, n);
                (first, x)
            }
            TruthDraw::Independent => {
                let x = &self.prior_mean + &self.prior_sqrt * standard_normal(&mut rng, n);
                (first, x)
            }
            TruthDraw::MeanAroundTruth => {
                let mean = &first + &self.prior_sqrt * standard_normal(&mut rng, n);
                (mean, first)
            }
        };
        let noise_sd: Vec<f64> = self.noise_diag.iter().map(|r| r.sqrt()).collect();
        let mut truths = Vec::with_capacity(self.steps);
        let mut measurements = Vec::with_capacity(self.steps);
        for step in 0..self.steps {
            if step > 0 {
                x = self.dynamics.transition() * &x + &self.process_sqrt * standard_normal(&mut rng, n);
            }
            let clean = (self.func)(&x);
            let eps = standard_normal(&mut rng, d);
            measurements.push(DVector::from_iterator(
                d,
                (0..d).map(|i| clean[i] + noise_sd[i] * eps[i]),
            ));
            truths.push(x.clone());
        }
        RunData {
            initial_mean,
            truths,
            measurements,
        }
    }

    /// Position errors of one filtered run, one entry per step.
    pub fn filter_run(
        &self,
        run: usize,
        seed: u64,
        engine: &MomentEngine<f64>,
        strategy: Strategy,
        eta_limit: f64,
    ) -> Result<Vec<f64>> {
        let data = self.simulate_run(run, seed);
        let mut order_rng = Self::rng(seed, 2 * run as u64 + 1);
        let d = self.beacons.len();
        let noise = self.noise_cov();
        let mut state = GaussianDensity::from_parts(data.initial_mean.clone(), self.prior_cov.clone());
        let mut errors = Vec::with_capacity(self.steps);
        for (step, (truth, y)) in data.truths.iter().zip(&data.measurements).enumerate() {
            if step > 0 {
                state = kf_predict(&state, &self.dynamics)?;
            }
            let model = MeasurementModel::new(self.func.clone(), noise.clone(), y.clone())?;
            state = match strategy {
                Strategy::Full => full_update(&state, &model, engine)?.0,
                Strategy::Sequential => {
                    let mut order: Vec<usize> = (0..d).collect();
                    order.shuffle(&mut order_rng);
                    sequential_update(&state, &model, engine, &order)?
                }
                Strategy::Klpukf => klpukf_update(&state, &model, engine, eta_limit)?.0,
            };
            let dx = state.mean()[0] - truth[0];
            let dy = state.mean()[1] - truth[1];
            errors.push(dx.hypot(dy));
        }
        Ok(errors)
    }
}

/// Mean position error per step over `runs` independent routes.
pub fn run_monte_carlo(
    scenario: &Scenario,
    engine: &MomentEngine<f64>,
    strategy: Strategy,
    eta_limit: f64,
    runs: usize,
    seed: u64,
) -> Result<MonteCarloResult> {
    if runs == 0 {
        return Err(FilterError::InvalidParameter("runs must be at least 1".into()));
    }
    let per_run: Vec<Vec<f64>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            scenario
                .filter_run(run, seed, engine, strategy, eta_limit)
                .map_err(|e| FilterError::RunFailed {
                    run,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let limit = (strategy == Strategy::Klpukf).then_some(eta_limit);
    Ok(MonteCarloResult::from_runs(
        &scenario.name,
        engine.kind(),
        strategy,
        limit,
        per_run,
    ))
}

/// Default threshold grid: 0, 0.1, …, 2.0 and ∞.
pub fn default_sweep_limits() -> Vec<f64> {
    (0..=20)
        .map(|i| i as f64 / 10.0)
        .chain(std::iter::once(f64::INFINITY))
        .collect()
}

/// One partitioned-update Monte Carlo per threshold, sharing random substreams.
pub fn eta_sweep(
    scenario: &Scenario,
    engine: &MomentEngine<f64>,
    limits: &[f64],
    runs: usize,
    seed: u64,
) -> Result<Vec<MonteCarloResult>> {
    if limits.is_empty() {
        return Err(FilterError::InvalidParameter("sweep needs at least one limit".into()));
    }
    limits
        .iter()
        .map(|&l| run_monte_carlo(scenario, engine, Strategy::Klpukf, l, runs, seed))
        .collect()
}

/// Flattens results into rows.
pub fn rows_of(results: &[MonteCarloResult]) -> Vec<MetricsRow> {
    results.iter().flat_map(|r| r.rows.iter().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::EngineKind;

    #[test]
    fn scenario_constants() {
        let s = Scenario::example3(10, 20, 1).unwrap();
        let (f, q, p0) = constant_velocity();
        assert_eq!(s.dynamics.transition(), &f);
        assert_eq!(s.dynamics.process_cov(), &q);
        assert_eq!(s.prior_cov, p0);
        assert_eq!(s.beacons.len(), 3);
        let run = s.simulate_run(0, 1);
        assert_eq!(run.measurements[0].len(), 3);
        assert_eq!(run.truths.len(), 20);
    }

    #[test]
    fn seeded_runs_repeat() {
        let s = Scenario::example3(10, 5, 9).unwrap();
        assert_eq!(s.simulate_run(3, 9), s.simulate_run(3, 9));
        assert_ne!(s.simulate_run(3, 9), s.simulate_run(4, 9));
    }

    #[test]
    fn monte_carlo_is_deterministic_and_infinite_limit_is_full() {
        let s = Scenario::example3(16, 3, 5).unwrap();
        let e = MomentEngine::with_defaults(EngineKind::Ckf);
        let a = run_monte_carlo(&s, &e, Strategy::Full, 0.0, 16, 5).unwrap();
        let b = run_monte_carlo(&s, &e, Strategy::Full, 0.0, 16, 5).unwrap();
        assert_eq!(a, b);
        let inf = run_monte_carlo(&s, &e, Strategy::Klpukf, f64::INFINITY, 16, 5).unwrap();
        assert_eq!(inf.errors, a.errors);
        assert_eq!(a.rows.len(), 3);
        assert!(a.rows.iter().all(|r| r.runs == 16 && r.mean_error >= 0.0));
    }

    #[test]
    fn sweep_defaults() {
        let l = default_sweep_limits();
        assert_eq!(l.len(), 22);
        assert_eq!(l[0], 0.0);
        assert_eq!(l[20], 2.0);
        assert!(l[21].is_infinite());
    }

    #[test]
    fn params_reject_bad_shapes() {
        let p = ScenarioParams {
            noise_diag: Some(vec![1.0]),
            ..Default::default()
        };
        assert!(Scenario::from_params(&p, 1, 1).is_err());
        assert!(Scenario::example3(0, 20, 1).is_err());
    }
}
