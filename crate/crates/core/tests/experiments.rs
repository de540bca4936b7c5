use std::sync::Arc;

use optcal::calibration::{ComputerModel, FnModel};
use optcal::experiments::{
    build_predictors, cv5_select_psi, default_psi_grid, pmse, pmse_on, run_experiment, ExperimentConfig,
    PredictorMethod, PredictorSettings, PsiPolicy,
};
use optcal::kernels::KernelFamily;
use optcal::models::{ex1_zeta, generate_dataset, NamedSystem, SystemId};
use optcal::regression::{default_lambda_grid, Dataset};
use optcal::rng::RngStream;
use optcal::{Error, ParamBox};

#[test]
fn cv_single_candidate_and_small_n() {
    let sys = NamedSystem::new(SystemId::Ex1);
    let data = generate_dataset(&sys, 10, 0.3, &mut RngStream::new(1, 0)).unwrap();
    let grid = default_lambda_grid();
    let s = RngStream::new(2, 0);
    assert_eq!(cv5_select_psi(&data, KernelFamily::Matern32, &[0.42], None, &grid, &s).unwrap(), 0.42);
    let psis = default_psi_grid(1);
    let chosen = cv5_select_psi(&data, KernelFamily::Matern32, &psis, None, &grid, &s).unwrap();
    assert!(psis.contains(&chosen));
}

#[test]
fn cv_picks_interior_scale_on_smooth_data() {
    let sys = NamedSystem::new(SystemId::Ex1);
    let psis = default_psi_grid(1);
    let data = generate_dataset(&sys, 50, 0.5, &mut RngStream::new(7, 0)).unwrap();
    let chosen = cv5_select_psi(&data, KernelFamily::Matern32, &psis, None, &default_lambda_grid(), &RngStream::new(107, 0))
        .unwrap();
    assert!(chosen > psis[0] && chosen < psis[psis.len() - 1], "{chosen}");
}

#[test]
fn pmse_of_zero_matches_quadrature() {
    let sys = NamedSystem::new(SystemId::Ex1);
    let m = 100_000;
    let mut s = RngStream::new(5, 5);
    let points: Vec<Vec<f64>> = (0..m).map(|_| s.uniform(1)).collect();
    let sq: Vec<f64> = points.iter().map(|x| ex1_zeta(x[0]).powi(2)).collect();
    let mean = sq.iter().sum::<f64>() / m as f64;
    let sd = (sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
    let se = sd / (m as f64).sqrt();
    let got = pmse(|_| 0.0, &sys, m, &mut RngStream::new(5, 5)).unwrap();
    assert_eq!(got, pmse_on(|_| 0.0, &points, &points.iter().map(|x| ex1_zeta(x[0])).collect::<Vec<_>>()));

    let q = 1_000_000;
    let quad = (0..q).map(|i| ex1_zeta((i as f64 + 0.5) / q as f64).powi(2)).sum::<f64>() / q as f64;
    assert!((got - quad).abs() < 3.0 * se, "{got} vs {quad} (se {se})");
}

#[test]
fn perfect_model_predictors_are_exact() {
    let model = FnModel::new(1, ParamBox::cube(2, -2.0, 2.0).unwrap(), |x: &[f64], t: &[f64]| t[0] + t[1] * x[0]);
    let truth = |x: &[f64]| 0.5 + 0.3 * x[0];
    let mut s = RngStream::new(6, 6);
    let points: Vec<Vec<f64>> = (0..50).map(|_| s.uniform(1)).collect();
    let y = points.iter().map(|x| truth(x)).collect();
    let data = Dataset::new(points, y).unwrap();
    let model: Arc<dyn ComputerModel> = Arc::new(model);
    let settings = PredictorSettings::new(1);
    let set = build_predictors(&data, model, &settings, &RngStream::new(7, 7)).unwrap();
    assert_eq!(set.predictors.len(), 4);

    let tests: Vec<Vec<f64>> = (0..2000).map(|_| s.uniform(1)).collect();
    let want: Vec<f64> = tests.iter().map(|x| truth(x)).collect();
    for (method, p) in &set.predictors {
        let e = pmse_on(|x| p.predict(x), &tests, &want);
        assert!(e <= 1e-6, "{method}: {e}");
    }
}

#[test]
fn single_method_map() {
    let sys = NamedSystem::new(SystemId::Ex1);
    let data = generate_dataset(&sys, 30, 0.3, &mut RngStream::new(8, 0)).unwrap();
    let mut settings = PredictorSettings::new(1);
    settings.methods = vec![PredictorMethod::Np];
    let set = build_predictors(&data, sys.model().clone(), &settings, &RngStream::new(9, 0)).unwrap();
    assert_eq!(set.predictors.keys().copied().collect::<Vec<_>>(), vec![PredictorMethod::Np]);
    assert!(set.optpred_trace.is_none());
}

fn toy_config(replicates: usize) -> ExperimentConfig {
    ExperimentConfig::parse(&format!(
        "system=ex1\nn=25\nsigma2=0.1,0.5\nreplicates={replicates}\nmc_test_points=2000\nseed=11\n"
    ))
    .unwrap()
}

#[test]
fn report_shape_and_order() {
    let report = run_experiment(&toy_config(3)).unwrap();
    assert_eq!(report.rows.len(), 8);
    let csv = report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,sigma2,mean_pmse,se_pmse,replicates");
    let keys: Vec<(String, f64)> = report.rows.iter().map(|r| (r.method.label().to_owned(), r.sigma2)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    assert_eq!(keys, sorted);
    assert!(report.rows.iter().all(|r| r.replicates == 3));
    assert_eq!(run_experiment(&toy_config(3)).unwrap().to_csv(), csv);
}

#[test]
fn one_replicate_one_method() {
    let mut cfg = toy_config(1);
    cfg.sigma2 = vec![0.1];
    cfg.predictors.methods = vec![PredictorMethod::Np];
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].se_pmse, 0.0);
}

#[test]
fn more_replicates_keep_earlier_ones() {
    let short = run_experiment(&toy_config(2)).unwrap();
    let long = run_experiment(&toy_config(4)).unwrap();
    for j in 0..2 {
        for r in 0..2 {
            assert_eq!(short.outcomes[j * 2 + r], long.outcomes[j * 4 + r]);
        }
    }
}

#[test]
fn replicate_errors_carry_the_index() {
    let mut cfg = toy_config(2);
    cfg.predictors.psi_policy = PsiPolicy::Fixed(-1.0);
    match run_experiment(&cfg) {
        Err(Error::Replicate { replicate, source }) => {
            assert_eq!(replicate, 0);
            assert!(matches!(*source, Error::InvalidInput(_)));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn optcal_usually_beats_lscal_on_first_example() {
    let cfg = ExperimentConfig::parse(
        "system=ex1\nn=50\nsigma2=0.1\nreplicates=100\nmc_test_points=10000\nmethods=LSCal,OptCal\n",
    )
    .unwrap();
    let report = run_experiment(&cfg).unwrap();
    let wins = report
        .outcomes
        .iter()
        .filter(|o| o.pmse[&PredictorMethod::OptCal] <= o.pmse[&PredictorMethod::LsCal])
        .count();
    assert!(wins >= 60, "{wins} of 100");
}
