use optcal::bayes::{partial_spline_limit, LinearComputerModel};
use optcal::calibration::{
    calibrate_l2, calibrate_ls, calibrate_optpred, calibrate_optpred_from, weighted_objective,
    CalibrationOptions, ComputerModel, FnModel, OptPredMode,
};
use optcal::kernels::{KernelSpec, DEFAULT_JITTER};
use optcal::models::{generate_dataset, NamedSystem, SystemId};
use optcal::regression::{fit_ridge, Dataset};
use optcal::rng::RngStream;
use optcal::ParamBox;

fn ex1_data(n: usize, sigma: f64, seed: u64) -> (NamedSystem, Dataset) {
    let sys = NamedSystem::new(SystemId::Ex1);
    let data = generate_dataset(&sys, n, sigma, &mut RngStream::new(seed, 0)).unwrap();
    (sys, data)
}

#[test]
fn ls_and_l2_approach_the_l2_target() {
    let (sys, data) = ex1_data(200, 0.1, 2024);
    let opts = CalibrationOptions::default();
    let stream = RngStream::new(1, 1);
    let ls = calibrate_ls(&data, sys.model().as_ref(), &opts, &stream).unwrap();
    assert!((ls.theta_hat[0] + 0.1780).abs() < 0.15, "{:?}", ls.theta_hat);
    let kernel = KernelSpec::matern32(0.2, 1).unwrap();
    let l2 = calibrate_l2(&data, sys.model().as_ref(), kernel, &opts, &stream).unwrap();
    assert!((l2.theta_hat[0] + 0.1780).abs() < 0.15, "{:?}", l2.theta_hat);
    let again = calibrate_l2(&data, sys.model().as_ref(), kernel, &opts, &stream).unwrap();
    assert_eq!(l2.theta_hat, again.theta_hat);
}

#[test]
fn weighted_objective_is_profiled_lagrangian() {
    let (sys, data) = ex1_data(40, 0.3, 5);
    let kernel = KernelSpec::matern32(0.25, 1).unwrap();
    for (theta, lambda) in [(-0.5, 1e-4), (0.1, 1e-2), (0.8, 0.3)] {
        let w = weighted_objective(&data, sys.model().as_ref(), kernel, lambda, &[theta]).unwrap();
        let eta = sys.model().eval_design(data.points(), &[theta]);
        let fit = fit_ridge(&data, Some(&eta), kernel, lambda).unwrap();
        let want = fit.lagrangian() / lambda;
        assert!((w - want).abs() <= 1e-9 * want, "{w} vs {want}");
        assert!(w >= 0.0);
    }
}

#[test]
fn weighted_objective_without_correlation() {
    // scale so small that off-diagonal kernel values underflow to zero
    let data = Dataset::new(vec![vec![0.1], vec![0.5], vec![0.9]], vec![1.0, -2.0, 0.5]).unwrap();
    let model = FnModel::new(1, ParamBox::cube(1, -1.0, 1.0).unwrap(), |_: &[f64], t: &[f64]| t[0]);
    let kernel = KernelSpec::matern32(1e-4, 1).unwrap();
    let lambda = 0.1;
    let w = weighted_objective(&data, &model, kernel, lambda, &[0.0]).unwrap();
    let want = (1.0 + 4.0 + 0.25) / (1.0 + DEFAULT_JITTER + 3.0 * lambda);
    assert!((w - want).abs() < 1e-12, "{w} vs {want}");
}

#[test]
fn full_mode_descends() {
    let opts = CalibrationOptions::default();
    for seed in 0..4 {
        let (sys, data) = ex1_data(50, 0.1f64.sqrt(), seed);
        let kernel = KernelSpec::matern32(0.2, 1).unwrap();
        let stream = RngStream::new(seed, 9);
        let r = calibrate_optpred(&data, sys.model().as_ref(), kernel, OptPredMode::Full, &opts, &stream).unwrap();
        assert!(r.objective_trace.len() >= 2);
        for w in r.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", r.objective_trace);
        }
    }
}

#[test]
fn theta_step_never_worse_than_incoming() {
    let (sys, data) = ex1_data(30, 0.3, 77);
    let kernel = KernelSpec::matern32(0.3, 1).unwrap();
    let lambda = 1e-3;
    let opts = CalibrationOptions {
        starts: 2,
        ..CalibrationOptions::default()
    };
    for theta0 in [-0.9, -0.2, 0.4, 0.95] {
        let r = calibrate_optpred_from(
            &data,
            sys.model().as_ref(),
            kernel,
            OptPredMode::OneStep,
            &opts,
            &RngStream::new(3, 3),
            &[theta0],
            Some(lambda),
        )
        .unwrap();
        let before = weighted_objective(&data, sys.model().as_ref(), kernel, lambda, &[theta0]).unwrap();
        let after = weighted_objective(&data, sys.model().as_ref(), kernel, lambda, &r.theta_hat).unwrap();
        assert!(after <= before, "{theta0}: {after} > {before}");
    }
}

#[test]
fn one_step_and_full_agree_on_perfect_model() {
    let model = FnModel::new(1, ParamBox::cube(2, -2.0, 2.0).unwrap(), |x: &[f64], t: &[f64]| {
        t[0] + t[1] * (3.0 * x[0]).sin()
    });
    let mut s = RngStream::new(4, 4);
    let points: Vec<Vec<f64>> = (0..25).map(|_| s.uniform(1)).collect();
    let truth = [0.7, -1.2];
    let y = points.iter().map(|x| model.eval(x, &truth)).collect();
    let data = Dataset::new(points, y).unwrap();
    let kernel = KernelSpec::matern32(0.3, 1).unwrap();
    let opts = CalibrationOptions::default();
    let stream = RngStream::new(5, 5);
    let one = calibrate_optpred(&data, &model, kernel, OptPredMode::OneStep, &opts, &stream).unwrap();
    let full = calibrate_optpred(&data, &model, kernel, OptPredMode::Full, &opts, &stream).unwrap();
    for x in [0.0, 0.3, 0.77, 1.0] {
        assert!((one.predict(&model, &[x]) - full.predict(&model, &[x])).abs() < 1e-6);
    }
    for (a, b) in one.theta_hat.iter().zip(&truth) {
        assert!((a - b).abs() < 1e-4);
    }
}

#[test]
fn full_mode_matches_partial_spline_for_linear_models() {
    let model = LinearComputerModel::polynomial(3, 10.0).unwrap();
    let mut s = RngStream::new(12, 12);
    let points: Vec<Vec<f64>> = (0..30).map(|_| s.uniform(1)).collect();
    let y = points
        .iter()
        .map(|x| 0.2 + x[0] + (6.0 * x[0]).sin() + s.normal(0.1))
        .collect();
    let data = Dataset::new(points, y).unwrap();
    let kernel = KernelSpec::matern32(0.3, 1).unwrap();
    let lambda = 1e-3;
    let (theta, fit) = partial_spline_limit(&data, &model, kernel, lambda).unwrap();
    let opts = CalibrationOptions::default();
    let r = calibrate_optpred_from(
        &data,
        &model,
        kernel,
        OptPredMode::Full,
        &opts,
        &RngStream::new(13, 13),
        &[0.0, 0.0, 0.0],
        Some(lambda),
    )
    .unwrap();
    for (a, b) in r.theta_hat.iter().zip(&theta) {
        assert!((a - b).abs() < 1e-5, "{:?} vs {theta:?}", r.theta_hat);
    }
    for i in 0..=10 {
        let x = [i as f64 / 10.0];
        let want = model.eval(&x, &theta) + fit.predict_unchecked(&x);
        assert!((r.predict(&model, &x) - want).abs() < 1e-6);
    }
}
