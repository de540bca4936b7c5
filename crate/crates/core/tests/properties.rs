use optcal::bayes::{posterior_mean_many, BayesHyper, LinearComputerModel};
use optcal::bounds::ParamBox;
use optcal::experiments::pmse_on;
use optcal::kernels::{gram, KernelSpec, DEFAULT_JITTER};
use optcal::linalg::{cholesky, matrix_exponential, trace_of_influence, Matrix, SymMatrix};
use optcal::regression::{default_lambda_grid, fit_ridge, gcv_score, Dataset, RidgeSystem};
use proptest::prelude::*;

fn unit_points(dim: usize, n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..=1.0f64, dim), n)
}

fn dataset(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Dataset> {
    unit_points(1, n)
        .prop_flat_map(|pts| {
            let n = pts.len();
            (Just(pts), prop::collection::vec(-3.0..3.0f64, n))
        })
        .prop_map(|(pts, y)| Dataset::new(pts, y).unwrap())
}

fn spd(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |b| {
        SymMatrix::from_fn(n, |i, j| {
            let mut s: f64 = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum();
            if i == j {
                s += 0.5;
            }
            s
        })
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_is_symmetric(x in prop::collection::vec(0.0..1.0f64, 3), y in prop::collection::vec(0.0..1.0f64, 3), psi in 0.01..5.0f64) {
        let k = KernelSpec::matern32(psi, 3).unwrap();
        let (a, b) = (k.eval(&x, &y).unwrap(), k.eval(&y, &x).unwrap());
        prop_assert_eq!(a, b);
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn solve_residual_is_small(a in (2usize..=64).prop_flat_map(spd)) {
        let n = a.order();
        let b: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * 0.37).sin()).collect();
        let x = cholesky(&a).unwrap().solve(&b).unwrap();
        let ax = a.mul_vec(&x).unwrap();
        let r: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        prop_assert!(norm(&r) <= 1e-8 * norm(&b));
    }

    #[test]
    fn expm_inverse_pair(entries in prop::collection::vec(-1.0..1.0f64, 16), scale in 0.0..10.0f64) {
        let raw = Matrix::from_rows(&[&entries[0..4], &entries[4..8], &entries[8..12], &entries[12..16]]).unwrap();
        let a = if raw.norm1() > 0.0 { raw.scale(scale / raw.norm1()) } else { raw };
        let prod = matrix_exponential(&a).mul(&matrix_exponential(&a.scale(-1.0)));
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((prod.get(i, j) - want).abs() < 1e-8, "{} at ({i},{j})", prod.get(i, j));
            }
        }
    }

    #[test]
    fn influence_trace_decreases(pts in unit_points(2, 2..=30), psi in 0.05..1.0f64) {
        let k = KernelSpec::matern32(psi, 2).unwrap();
        let g = gram(&k, &pts, DEFAULT_JITTER).unwrap();
        let sigma = g.with_jitter();
        let mut last = f64::INFINITY;
        for nl in [1e-8, 1e-5, 1e-3, 0.1, 1.0, 100.0] {
            let t = trace_of_influence(&sigma, nl).unwrap();
            prop_assert!(t <= last + 1e-12);
            last = t;
        }
    }

    #[test]
    fn profile_identity(data in dataset(5..=50), psi in 0.05..1.0f64, li in 0usize..60) {
        let lambda = default_lambda_grid()[li];
        let k = KernelSpec::matern32(psi, 1).unwrap();
        let fit = fit_ridge(&data, None, k, lambda).unwrap();
        let weighted = RidgeSystem::new(data.points(), k).unwrap().weighted_norm_sq(data.y(), lambda).unwrap();
        let (lhs, rhs) = (lambda * weighted, fit.lagrangian());
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e-300), "{lhs} vs {rhs}");
        let null: f64 = data.y().iter().map(|v| v * v).sum::<f64>() / data.len() as f64;
        prop_assert!(rhs <= null * (1.0 + 1e-12));
    }

    #[test]
    fn gcv_ignores_order(data in dataset(3..=40), psi in 0.05..1.0f64, lambda in 1e-6..1.0f64, rot in 1usize..40) {
        let k = KernelSpec::matern32(psi, 1).unwrap();
        let n = data.len();
        let order: Vec<usize> = (0..n).map(|i| (i + rot) % n).rev().collect();
        let a = gcv_score(&data, None, k, lambda).unwrap();
        let b = gcv_score(&data.subset(&order), None, k, lambda).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300));
    }

    #[test]
    fn shrinkage_is_monotone(data in dataset(2..=40), psi in 0.05..1.0f64) {
        let k = KernelSpec::matern32(psi, 1).unwrap();
        let system = RidgeSystem::new(data.points(), k).unwrap();
        let mut last = f64::INFINITY;
        for lambda in optcal::regression::log_grid(1e-6, 10.0, 15) {
            let c = system.fit(data.y(), lambda).unwrap().rkhs_norm_sq();
            prop_assert!(c <= last * (1.0 + 1e-9) + 1e-15);
            last = c;
        }
    }

    #[test]
    fn reflection_stays_in_box(x in prop::collection::vec(-50.0..50.0f64, 3)) {
        let b = ParamBox::new(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 7.0]).unwrap();
        let mut p = x.clone();
        b.reflect(&mut p);
        prop_assert!(b.contains(&p));
    }

    #[test]
    fn posterior_mean_is_linear(data in dataset(6..=20), y2 in prop::collection::vec(-2.0..2.0f64, 20), a in -2.0..2.0f64) {
        let n = data.len();
        let other = Dataset::new(data.points().to_vec(), y2[..n].to_vec()).unwrap();
        let combo: Vec<f64> = data.y().iter().zip(other.y()).map(|(u, v)| u + a * v).collect();
        let sum = Dataset::new(data.points().to_vec(), combo).unwrap();
        let model = LinearComputerModel::polynomial(2, 10.0).unwrap();
        let k = KernelSpec::matern32(0.3, 1).unwrap();
        let h = BayesHyper::new(10.0, 1.0, 0.05).unwrap();
        let xs = vec![vec![0.1], vec![0.5], vec![0.95]];
        let p1 = posterior_mean_many(&data, &model, k, &h, &xs).unwrap();
        let p2 = posterior_mean_many(&other, &model, k, &h, &xs).unwrap();
        let p3 = posterior_mean_many(&sum, &model, k, &h, &xs).unwrap();
        for i in 0..3 {
            let want = p1[i] + a * p2[i];
            prop_assert!((p3[i] - want).abs() <= 1e-8 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn pmse_ignores_draw_order(pts in unit_points(1, 5..=200), shift in 0usize..200) {
        let truth: Vec<f64> = pts.iter().map(|x| x[0] * x[0]).collect();
        let f = |x: &[f64]| x[0];
        let a = pmse_on(f, &pts, &truth);
        let n = pts.len();
        let mut perm: Vec<usize> = (0..n).rev().collect();
        perm.rotate_left(shift % n);
        let p2: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let t2: Vec<f64> = perm.iter().map(|&i| truth[i]).collect();
        let b = pmse_on(f, &p2, &t2);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn gram_is_positive_definite(pts in unit_points(2, 100..=500), psi in 0.05..1.5f64) {
        let k = KernelSpec::matern32(psi, 2).unwrap();
        let mut pts = pts;
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        let g = gram(&k, &pts, DEFAULT_JITTER).unwrap();
        prop_assert_eq!(g.jitter(), DEFAULT_JITTER);
    }
}
