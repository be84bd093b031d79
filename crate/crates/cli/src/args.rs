use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use klpukf::{EngineKind, Strategy};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "klpukf", version, about = "Partitioned Gaussian filter updates driven by a KL nonlinearity measure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scalar state with three trigonometric measurements: nonlinearity and transform.
    Example1(RunArgs),
    /// Static 2-D range-beacon update: posteriors against a grid truth.
    Example2(RunArgs),
    /// Tracking Monte Carlo: mean position errors per engine and strategy.
    Example3(RunArgs),
    /// Tracking Monte Carlo over a list of nonlinearity thresholds.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file; command-line flags take precedence.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Moment engine: ekf, nekf2, ukf, ckf, ghq or grid.
    #[arg(long)]
    pub engine: Option<EngineKind>,
    /// Update strategy: full, sequential or klpukf.
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Nonlinearity threshold for the klpukf strategy (nonnegative number or `inf`).
    #[arg(long, value_name = "R|inf", value_parser = parse_eta_limit)]
    pub eta_limit: Option<f64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the Monte Carlo runs.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file for the main table (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Plot data: posterior curves (example1), 50% contours (example2) or
    /// per-step metrics (example3).
    #[arg(long, value_name = "PATH")]
    pub plot_out: Option<PathBuf>,
    /// Grid engine nodes per axis.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Grid engine half width in standard deviations.
    #[arg(long)]
    pub grid_width: Option<f64>,
    /// Nodes per axis of the reference grid posterior (examples 1 and 2).
    #[arg(long)]
    pub truth_points: Option<usize>,
    #[arg(long)]
    pub ukf_alpha: Option<f64>,
    #[arg(long)]
    pub ukf_beta: Option<f64>,
    #[arg(long)]
    pub ukf_kappa: Option<f64>,
    /// Gauss-Hermite points per axis.
    #[arg(long)]
    pub ghq_order: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated thresholds (default 0, 0.1, ..., 2.0, inf).
    #[arg(long, value_delimiter = ',', value_parser = parse_eta_limit)]
    pub limits: Option<Vec<f64>>,
}

pub fn parse_eta_limit(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number or `inf`"))?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("threshold must be nonnegative, got `{s}`"))
    }
}
