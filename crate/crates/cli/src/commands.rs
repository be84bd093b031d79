use std::collections::BTreeMap;

use klpukf::nonlinearity::marginal_element_eta;
use klpukf::partition::{full_update, klpukf_update, sequential_update};
use klpukf::scenarios::{
    default_sweep_limits, eta_sweep, example1_model, example2_model, grid_truth_posterior,
    percent_delta, rows_of, run_monte_carlo, MetricsRow, MonteCarloResult, Scenario,
};
use klpukf::{
    gaussian_kld, nonlinearity_report, upsilon, EngineKind, GaussianDensity, MeasurementModel,
    MomentEngine, Strategy,
};
use nalgebra::{DMatrix, DVector};

use crate::config::RunConfig;
use crate::output::{Cell, Table};
use crate::CliError;

/// Main table plus optional plot data.
pub struct Report {
    pub table: Table,
    pub plot: Option<Table>,
}

const EXAMPLE1_TRUTH_POINTS: usize = 4001;
const EXAMPLE2_TRUTH_POINTS: usize = 601;
const TRUTH_HALF_WIDTH: f64 = 6.0;
/// Squared Mahalanobis radius of the 50% region of a 2-D Gaussian, `−2 ln 0.5`.
const HALF_MASS_RADIUS_SQ: f64 = 2.0 * std::f64::consts::LN_2;
const ELLIPSE_POINTS: usize = 72;

fn strategies(cfg: &RunConfig) -> Vec<Strategy> {
    cfg.strategy.map_or_else(|| Strategy::ALL.to_vec(), |s| vec![s])
}

fn warn_if_linearizing(engine: &MomentEngine<f64>) {
    if !engine.measures_nonlinearity() {
        eprintln!(
            "warning: engine `{}` linearizes the measurement, so its nonlinearity is always zero and it cannot steer the klpukf update",
            engine.kind()
        );
    }
}

fn update(
    prior: &GaussianDensity<f64>,
    model: &MeasurementModel<f64>,
    engine: &MomentEngine<f64>,
    strategy: Strategy,
    eta_limit: f64,
) -> Result<GaussianDensity<f64>, CliError> {
    Ok(match strategy {
        Strategy::Full => full_update(prior, model, engine)?.0,
        Strategy::Sequential => {
            let order: Vec<usize> = (0..model.dim()).collect();
            sequential_update(prior, model, engine, &order)?
        }
        Strategy::Klpukf => klpukf_update(prior, model, engine, eta_limit)?.0,
    })
}

fn limit_cell(strategy: Strategy, eta_limit: f64) -> Cell {
    if strategy == Strategy::Klpukf {
        Cell::Num(eta_limit)
    } else {
        Cell::Empty
    }
}

/// Per-element nonlinearity before and after decorrelation, and the transform.
pub fn example1(cfg: &RunConfig) -> Result<Report, CliError> {
    let (prior, model) = example1_model(cfg.seed)?;
    let engine = cfg.engine_for(cfg.engine.unwrap_or(EngineKind::Grid), prior.dim())?;
    warn_if_linearizing(&engine);
    let d = model.dim();
    let moments = engine.moments(&prior, model.func().as_ref(), d)?;
    let ups = upsilon(&moments, &prior)?;
    let report = nonlinearity_report(&ups, model.noise_cov())?;
    let original = marginal_element_eta(&ups, model.noise_cov());

    let mut header = vec!["element", "eta_original", "eta_transformed", "total_eta"];
    let cols: Vec<String> = (1..=d).map(|j| format!("d_{j}")).collect();
    header.extend(cols.iter().map(String::as_str));
    let mut table = Table::new(&header);
    for i in 0..d {
        let mut row: Vec<Cell> = vec![
            (i + 1).into(),
            original[i].into(),
            report.per_element_eta[i].into(),
            report.eta_total.into(),
        ];
        row.extend((0..d).map(|j| Cell::Num(report.decorrelation.transform[(i, j)])));
        table.push(row);
    }

    let plot = match cfg.plot_out {
        Some(_) => {
            let points = cfg.truth_points.unwrap_or(EXAMPLE1_TRUTH_POINTS);
            let truth = grid_truth_posterior(&prior, &model, points, TRUTH_HALF_WIDTH)?;
            let axis = &truth.axes[0];
            let dx = axis[1] - axis[0];
            let mut curves = Table::new(&["x", "truth", "full", "sequential", "klpukf"]);
            let posts: Vec<GaussianDensity<f64>> = Strategy::ALL
                .iter()
                .map(|&s| update(&prior, &model, &engine, s, cfg.eta_limit))
                .collect::<Result<_, _>>()?;
            for (k, &x) in axis.iter().enumerate() {
                let mut row = vec![Cell::Num(x), Cell::Num(truth.masses[k] / dx)];
                row.extend(posts.iter().map(|p| Cell::Num(normal_pdf(x, p))));
                curves.push(row);
            }
            Some(curves)
        }
        None => None,
    };
    Ok(Report { table, plot })
}

fn normal_pdf(x: f64, p: &GaussianDensity<f64>) -> f64 {
    let (m, v) = (p.mean()[0], p.cov()[(0, 0)]);
    (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
}

fn ellipse(p: &GaussianDensity<f64>) -> Vec<DVector<f64>> {
    let l = p.cov().clone().cholesky().map(|c| c.l()).unwrap_or_else(|| DMatrix::zeros(2, 2));
    let r = HALF_MASS_RADIUS_SQ.sqrt();
    (0..ELLIPSE_POINTS)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / ELLIPSE_POINTS as f64;
            p.mean() + &l * DVector::from_vec(vec![r * t.cos(), r * t.sin()])
        })
        .collect()
}

fn moment_row(source: &str, engine: Cell, limit: Cell, p: &GaussianDensity<f64>, kld: f64) -> Vec<Cell> {
    let (m, c) = (p.mean(), p.cov());
    vec![
        source.into(),
        engine,
        limit,
        m[0].into(),
        m[1].into(),
        c[(0, 0)].into(),
        c[(0, 1)].into(),
        c[(1, 1)].into(),
        kld.into(),
    ]
}

/// Posterior moments per engine and strategy with their divergence from the
/// dense-grid posterior.
pub fn example2(cfg: &RunConfig) -> Result<Report, CliError> {
    let (prior, model) = example2_model()?;
    let points = cfg.truth_points.unwrap_or(EXAMPLE2_TRUTH_POINTS);
    let truth_grid = grid_truth_posterior(&prior, &model, points, TRUTH_HALF_WIDTH)?;
    let truth = truth_grid.gaussian();
    let kinds = cfg
        .engine
        .map_or_else(|| vec![EngineKind::Grid, EngineKind::Ukf, EngineKind::Nekf2], |k| vec![k]);

    let mut table = Table::new(&[
        "source", "engine", "eta_limit", "mean_1", "mean_2", "cov_11", "cov_12", "cov_22", "kld_to_truth",
    ]);
    let mut contours = Table::new(&["source", "engine", "x_1", "x_2"]);
    let mut add_contour = |source: &str, engine: &str, pts: &[DVector<f64>]| {
        for p in pts {
            contours.push(vec![source.into(), engine.into(), p[0].into(), p[1].into()]);
        }
    };
    table.push(moment_row("truth", Cell::Empty, Cell::Empty, &truth, 0.0));
    add_contour("truth", "", &truth_grid.hpd_boundary(0.5));
    table.push(moment_row("prior", Cell::Empty, Cell::Empty, &prior, gaussian_kld(&prior, &truth)?));
    add_contour("prior", "", &ellipse(&prior));

    for kind in kinds {
        let engine = cfg.engine_for(kind, prior.dim())?;
        warn_if_linearizing(&engine);
        for strategy in strategies(cfg) {
            let post = update(&prior, &model, &engine, strategy, cfg.eta_limit)?;
            let kld = gaussian_kld(&post, &truth)?;
            table.push(moment_row(
                strategy.as_str(),
                kind.as_str().into(),
                limit_cell(strategy, cfg.eta_limit),
                &post,
                kld,
            ));
            add_contour(strategy.as_str(), kind.as_str(), &ellipse(&post));
        }
    }
    Ok(Report {
        table,
        plot: cfg.plot_out.as_ref().map(|_| contours),
    })
}

pub fn metrics_table(rows: &[MetricsRow]) -> Table {
    let mut t = Table::new(&[
        "scenario", "engine", "strategy", "eta_limit", "step", "runs", "mean_error", "std_error",
    ]);
    for r in rows {
        t.push(vec![
            r.scenario.as_str().into(),
            r.engine.as_str().into(),
            r.strategy.as_str().into(),
            r.eta_limit.into(),
            r.step.into(),
            r.runs.into(),
            r.mean_error.into(),
            r.std_error.into(),
        ]);
    }
    t
}

fn scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    let mut params = cfg.scenario.clone();
    params.steps = Some(cfg.steps);
    Scenario::from_params(&params, cfg.runs, cfg.seed).map_err(|e| CliError::Config(e.to_string()))
}

/// Mean position errors at the first and last step, one row per engine, with
/// percent changes against the all-at-once update.
pub fn example3(cfg: &RunConfig) -> Result<Report, CliError> {
    let sc = scenario(cfg)?;
    let kinds = cfg.engine.map_or_else(
        || vec![EngineKind::Ekf, EngineKind::Nekf2, EngineKind::Ukf, EngineKind::Ghq],
        |k| vec![k],
    );
    let engines: Vec<(EngineKind, MomentEngine<f64>)> = kinds
        .iter()
        .map(|&k| Ok((k, cfg.engine_for(k, sc.state_dim())?)))
        .collect::<Result<_, CliError>>()?;
    let mut results: BTreeMap<(usize, usize), MonteCarloResult> = BTreeMap::new();
    for (e, (_, engine)) in engines.iter().enumerate() {
        if cfg.engine.is_some() && strategies(cfg).contains(&Strategy::Klpukf) {
            warn_if_linearizing(engine);
        }
        for strategy in strategies(cfg) {
            let r = run_monte_carlo(&sc, engine, strategy, cfg.eta_limit, cfg.runs, cfg.seed)?;
            results.insert((e, strategy as usize), r);
        }
    }

    let mut table = Table::new(&[
        "table", "engine", "step", "all", "all_se", "sequential", "sequential_se",
        "sequential_delta_pct", "klpukf", "klpukf_se", "klpukf_delta_pct",
    ]);
    for (label, step) in [("first", 1), ("last", cfg.steps)] {
        for (e, (kind, _)) in engines.iter().enumerate() {
            let get = |s: Strategy| results.get(&(e, s as usize)).map(|r| r.step(step));
            let full = get(Strategy::Full).map(|r| r.mean_error);
            let mut row: Vec<Cell> = vec![label.into(), kind.as_str().into(), step.into()];
            for s in Strategy::ALL {
                let r = get(s);
                row.push(r.map(|r| r.mean_error).into());
                row.push(r.map(|r| r.std_error).into());
                if s != Strategy::Full {
                    let delta = match (r, full) {
                        (Some(r), Some(f)) => Some(percent_delta(r.mean_error, f)),
                        _ => None,
                    };
                    row.push(delta.into());
                }
            }
            table.push(row);
        }
    }
    let plot = cfg.plot_out.as_ref().map(|_| {
        let all: Vec<MonteCarloResult> = results.into_values().collect();
        metrics_table(&rows_of(&all))
    });
    Ok(Report { table, plot })
}

/// Partitioned-update Monte Carlo at each threshold, all steps.
pub fn sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    let sc = scenario(cfg)?;
    let kind = cfg.engine.unwrap_or(EngineKind::Ukf);
    let engine = cfg.engine_for(kind, sc.state_dim())?;
    warn_if_linearizing(&engine);
    let limits = cfg.limits.clone().unwrap_or_else(default_sweep_limits);
    let results = eta_sweep(&sc, &engine, &limits, cfg.runs, cfg.seed)?;
    Ok(Report {
        table: metrics_table(&rows_of(&results)),
        plot: None,
    })
}
