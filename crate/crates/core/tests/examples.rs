use approx::assert_relative_eq;
use klpukf::engines::{EngineKind, MomentEngine};
use klpukf::partition::{full_update, klpukf_update};
use klpukf::scenarios::{example1_model, example2_model, grid_truth_posterior, quadratic_model};
use klpukf::{gaussian_kld, nonlinearity_report, upsilon};

fn grid() -> MomentEngine<f64> {
    MomentEngine::with_defaults(EngineKind::Grid)
}

#[test]
fn trig_example_total_nonlinearity() {
    let (prior, model) = example1_model(1).unwrap();
    let m = grid().moments(&prior, model.func().as_ref(), 3).unwrap();
    let report = nonlinearity_report(&upsilon(&m, &prior).unwrap(), model.noise_cov()).unwrap();
    assert!((report.eta_total - 0.8533).abs() < 0.005, "{}", report.eta_total);
    // One exactly linear combination: y₁ − y₂ = 2x + 11.
    assert!(report.eigenvalues[0] < 1e-10);
    let row = report.decorrelation.transform.row(0);
    assert_relative_eq!(row[0], -row[1], epsilon = 1e-9);
    assert!(row[2].abs() < 1e-9);
}

#[test]
fn trig_example_partitioned_update_is_closer_to_truth() {
    for seed in [1, 2, 3, 2017] {
        let (prior, model) = example1_model(seed).unwrap();
        let truth = grid_truth_posterior(&prior, &model, 4001, 10.0).unwrap().gaussian();
        let (full, _) = full_update(&prior, &model, &grid()).unwrap();
        let (part, trace) = klpukf_update(&prior, &model, &grid(), 0.0).unwrap();
        assert!(trace.iterations[0].eta_per_element[0] <= 1e-10);
        let d_full = gaussian_kld(&full, &truth).unwrap();
        let d_part = gaussian_kld(&part, &truth).unwrap();
        assert!(d_part < d_full, "seed {seed}: {d_part} vs {d_full}");
    }
}

#[test]
fn quadratic_example_first_pass() {
    let (prior, model) = quadratic_model().unwrap();
    let engine = MomentEngine::with_defaults(EngineKind::Nekf2);
    let (_, trace) = klpukf_update(&prior, &model, &engine, 0.0).unwrap();
    let first = &trace.iterations[0];
    assert_eq!(first.chosen_k, 1);
    assert!(first.eta_per_element[0] < 1e-12);
    assert_relative_eq!(first.state.mean()[0], -0.5, epsilon = 1e-10);
    assert_relative_eq!(first.state.cov()[(0, 0)], 1.0 / 3.0, epsilon = 1e-10);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert_relative_eq!(first.applied_rows[(0, 0)], s, epsilon = 1e-12);
    assert_relative_eq!(first.applied_rows[(0, 1)], s, epsilon = 1e-12);
}

#[test]
fn range_example_truth_grid_is_resolved() {
    let (prior, model) = example2_model().unwrap();
    let coarse = grid_truth_posterior(&prior, &model, 301, 6.0).unwrap();
    let fine = grid_truth_posterior(&prior, &model, 601, 6.0).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-3);
    for i in 0..2 {
        assert!(rel(coarse.mean[i], fine.mean[i]) < 1e-4);
        for j in 0..2 {
            assert!((coarse.cov[(i, j)] - fine.cov[(i, j)]).abs() < 1e-4 * fine.cov.amax());
        }
    }
}

#[test]
fn range_example_engine_comparisons() {
    let (prior, model) = example2_model().unwrap();
    let truth = grid_truth_posterior(&prior, &model, 401, 6.0).unwrap().gaussian();
    let (ggf, _) = full_update(&prior, &model, &grid()).unwrap();
    assert!(ggf.cov().trace() > truth.cov().trace());

    let ukf = MomentEngine::with_defaults(EngineKind::Ukf);
    let (unscented, _) = full_update(&prior, &model, &ukf).unwrap();
    assert!((unscented.mean() - ggf.mean()).amax() > 1e-3);

    for engine in [grid(), ukf] {
        let (full, _) = full_update(&prior, &model, &engine).unwrap();
        let (part, _) = klpukf_update(&prior, &model, &engine, 0.0).unwrap();
        let d_full = gaussian_kld(&full, &truth).unwrap();
        let d_part = gaussian_kld(&part, &truth).unwrap();
        assert!(d_part < d_full, "{:?}: {d_part} vs {d_full}", engine.kind());
    }
}
