//! JSON config files merged with command-line flags into a validated run config.

use std::path::{Path, PathBuf};

use klpukf::engines::{
    default_points_per_axis, DEFAULT_HALF_WIDTH, MAX_GRID_DIM,
};
use klpukf::scenarios::{ScenarioParams, TruthDraw, DEFAULT_RUNS, DEFAULT_SEED, DEFAULT_STEPS};
use klpukf::{EngineKind, MomentEngine, Strategy};
use serde::{Deserialize, Deserializer};

use crate::args::{parse_eta_limit, RunArgs};
use crate::output::Format;
use crate::CliError;

fn eta_limit_value<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Option::<Raw>::deserialize(d)? {
        None => Ok(None),
        Some(Raw::Num(v)) => parse_eta_limit(&v.to_string()).map(Some),
        Some(Raw::Text(s)) => parse_eta_limit(&s).map(Some),
    }
    .map_err(serde::de::Error::custom)
}

fn eta_limit_list<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    struct Wrap(#[serde(deserialize_with = "eta_limit_value")] Option<f64>);
    let raw = Option::<Vec<Wrap>>::deserialize(d)?;
    raw.map(|v| {
        v.into_iter()
            .map(|w| w.0.ok_or_else(|| serde::de::Error::custom("null threshold")))
            .collect()
    })
    .transpose()
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub engine: Option<EngineKind>,
    pub strategy: Option<Strategy>,
    #[serde(default, deserialize_with = "eta_limit_value")]
    pub eta_limit: Option<f64>,
    pub runs: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub plot_out: Option<PathBuf>,
    pub grid_points: Option<usize>,
    pub grid_width: Option<f64>,
    pub truth_points: Option<usize>,
    pub ukf_alpha: Option<f64>,
    pub ukf_beta: Option<f64>,
    pub ukf_kappa: Option<f64>,
    pub ghq_order: Option<usize>,
    #[serde(default, deserialize_with = "eta_limit_list")]
    pub limits: Option<Vec<f64>>,
    pub prior_mean: Option<Vec<f64>>,
    pub prior_cov: Option<Vec<Vec<f64>>>,
    pub beacons: Option<Vec<[f64; 2]>>,
    pub noise_diag: Option<Vec<f64>>,
    pub transition: Option<Vec<Vec<f64>>>,
    pub process_cov: Option<Vec<Vec<f64>>>,
    pub truth_draw: Option<TruthDraw>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Fully resolved settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub engine: Option<EngineKind>,
    pub strategy: Option<Strategy>,
    pub eta_limit: f64,
    pub runs: usize,
    pub steps: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub plot_out: Option<PathBuf>,
    pub grid_points: Option<usize>,
    pub grid_width: f64,
    pub truth_points: Option<usize>,
    pub ukf_alpha: f64,
    pub ukf_beta: f64,
    pub ukf_kappa: Option<f64>,
    pub ghq_order: usize,
    pub limits: Option<Vec<f64>>,
    pub scenario: ScenarioParams,
}

impl RunConfig {
    /// Flags override the config file, which overrides defaults.
    pub fn resolve(args: &RunArgs, limits: Option<Vec<f64>>) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let cfg = RunConfig {
            engine: args.engine.or(file.engine),
            strategy: args.strategy.or(file.strategy),
            eta_limit: args.eta_limit.or(file.eta_limit).unwrap_or(0.0),
            runs: args.runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
            steps: args.steps.or(file.steps).unwrap_or(DEFAULT_STEPS),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            threads: args.threads.or(file.threads),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            out: args.out.clone().or(file.out),
            plot_out: args.plot_out.clone().or(file.plot_out),
            grid_points: args.grid_points.or(file.grid_points),
            grid_width: args.grid_width.or(file.grid_width).unwrap_or(DEFAULT_HALF_WIDTH),
            truth_points: args.truth_points.or(file.truth_points),
            ukf_alpha: args.ukf_alpha.or(file.ukf_alpha).unwrap_or(1.0),
            ukf_beta: args.ukf_beta.or(file.ukf_beta).unwrap_or(0.0),
            ukf_kappa: args.ukf_kappa.or(file.ukf_kappa),
            ghq_order: args.ghq_order.or(file.ghq_order).unwrap_or(3),
            limits: limits.or(file.limits),
            scenario: ScenarioParams {
                prior_mean: file.prior_mean,
                prior_cov: file.prior_cov,
                beacons: file.beacons,
                noise_diag: file.noise_diag,
                transition: file.transition,
                process_cov: file.process_cov,
                steps: None,
                truth_draw: file.truth_draw,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.runs == 0 || self.steps == 0 {
            return bad("runs and steps must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if !(self.grid_width > 0.0) || !self.grid_width.is_finite() {
            return bad(format!("grid width must be positive, got {}", self.grid_width));
        }
        if matches!(self.grid_points, Some(p) if p < 2) || matches!(self.truth_points, Some(p) if p < 2) {
            return bad("grid resolutions need at least 2 points".into());
        }
        if self.ghq_order == 0 {
            return bad("Gauss-Hermite order must be at least 1".into());
        }
        if matches!(&self.limits, Some(l) if l.is_empty()) {
            return bad("sweep needs at least one threshold".into());
        }
        Ok(())
    }

    /// The configured engine of `kind` for a state of dimension `n`.
    pub fn engine_for(&self, kind: EngineKind, n: usize) -> Result<MomentEngine<f64>, CliError> {
        Ok(match kind {
            EngineKind::Ukf => MomentEngine::Unscented {
                alpha: self.ukf_alpha,
                beta: self.ukf_beta,
                kappa: self.ukf_kappa,
            },
            EngineKind::Ghq => MomentEngine::GaussHermite { order: self.ghq_order },
            EngineKind::Grid => {
                if n > MAX_GRID_DIM {
                    return Err(CliError::Config(format!(
                        "grid engine supports at most {MAX_GRID_DIM} state dimensions, scenario has {n}"
                    )));
                }
                MomentEngine::Grid {
                    half_width_sigmas: self.grid_width,
                    points_per_axis: Some(self.grid_points.unwrap_or_else(|| default_points_per_axis(n))),
                }
            }
            other => MomentEngine::with_defaults(other),
        })
    }
}
