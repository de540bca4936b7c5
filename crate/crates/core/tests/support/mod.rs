//! Dense textbook oracles evaluated with nalgebra. Each returns the largest
//! relative discrepancy found against the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use optcal::bayes::{partial_spline_limit, posterior_mean_many, BayesHyper, LinearComputerModel};
use optcal::calibration::ComputerModel;
use optcal::kernels::{kernel_matrix, KernelSpec, DEFAULT_JITTER};
use optcal::linalg::{cholesky, matrix_exponential, trace_of_influence, Matrix, SymMatrix};
use optcal::regression::{fit_ridge, gcv_score, Dataset};
use optcal::rng::RngStream;

pub fn random_data(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut s = RngStream::new(seed, 3);
    let points: Vec<Vec<f64>> = (0..n).map(|_| s.uniform(dim)).collect();
    let y = points
        .iter()
        .map(|x| (5.0 * x[0]).sin() + x.iter().sum::<f64>() + s.normal(0.2))
        .collect();
    Dataset::new(points, y).unwrap()
}

fn dense_gram(kernel: &KernelSpec, points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        kernel.eval_unchecked(&points[i], &points[j]) + if i == j { DEFAULT_JITTER } else { 0.0 }
    })
}

fn cross(kernel: &KernelSpec, points: &[Vec<f64>], x: &[f64]) -> DVector<f64> {
    DVector::from_iterator(points.len(), points.iter().map(|p| kernel.eval_unchecked(p, x)))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn ridge_vs_normal_equations() -> f64 {
    let mut worst: f64 = 0.0;
    for (seed, n, dim, psi, lambda) in [(1, 20, 1, 0.3, 1e-3), (2, 35, 2, 0.5, 1e-2), (3, 12, 1, 0.2, 0.1)] {
        let data = random_data(n, dim, seed);
        let kernel = KernelSpec::matern32(psi, dim).unwrap();
        let fit = fit_ridge(&data, None, kernel, lambda).unwrap();

        // minimize (1/n)||y - S c||^2 + λ c'Sc  =>  (S S + nλ S) c = S y
        let s = dense_gram(&kernel, data.points());
        let y = DVector::from_column_slice(data.y());
        let lhs = &s * &s + &s * (n as f64 * lambda);
        let c = lhs.lu().solve(&(&s * &y)).unwrap();

        let mut probe = RngStream::new(seed, 99);
        for _ in 0..20 {
            let x = probe.uniform(dim);
            let want = cross(&kernel, data.points(), &x).dot(&c);
            worst = worst.max(rel(fit.predict(&x).unwrap(), want));
        }
    }
    worst
}

pub fn gcv_vs_dense_inverse() -> f64 {
    let mut worst: f64 = 0.0;
    for (seed, n, lambda) in [(4, 25, 1e-4), (5, 40, 1e-2), (6, 10, 1.0)] {
        let data = random_data(n, 1, seed);
        let kernel = KernelSpec::matern32(0.25, 1).unwrap();
        let got = gcv_score(&data, None, kernel, lambda).unwrap();

        let s = dense_gram(&kernel, data.points());
        let m = &s + DMatrix::identity(n, n) * (n as f64 * lambda);
        let a = &s * m.try_inverse().unwrap();
        let i_minus_a = DMatrix::identity(n, n) - a;
        let r = &i_minus_a * DVector::from_column_slice(data.y());
        let nf = n as f64;
        let want = (r.norm_squared() / nf) / (i_minus_a.trace() / nf).powi(2);
        worst = worst.max((got - want).abs() / want.abs());
    }
    worst
}

pub fn trace_vs_eigenvalues() -> f64 {
    let data = random_data(30, 2, 7);
    let kernel = KernelSpec::matern32(0.4, 2).unwrap();
    let sigma = kernel_matrix(&kernel, data.points()).unwrap();
    let dense = DMatrix::from_fn(30, 30, |i, j| sigma.get(i, j));
    let eig = dense.symmetric_eigen();
    [1e-6, 1e-3, 0.1, 10.0]
        .iter()
        .map(|&nl| {
            let want: f64 = eig.eigenvalues.iter().map(|mu| mu / (mu + nl)).sum();
            rel(trace_of_influence(&sigma, nl).unwrap(), want)
        })
        .fold(0.0, f64::max)
}

pub fn solve_vs_inverse() -> f64 {
    let mut s = RngStream::new(8, 8);
    let mut worst: f64 = 0.0;
    for n in [2, 5, 17, 40] {
        let b: Vec<f64> = (0..n * n).map(|_| s.normal(1.0)).collect();
        let bm = DMatrix::from_row_slice(n, n, &b);
        let a = &bm * bm.transpose() + DMatrix::identity(n, n) * (n as f64);
        let sym = SymMatrix::from_fn(n, |i, j| a[(i, j)]);
        let rhs: Vec<f64> = (0..n).map(|_| s.normal(1.0)).collect();
        let got = cholesky(&sym).unwrap().solve(&rhs).unwrap();
        let want = a.try_inverse().unwrap() * DVector::from_column_slice(&rhs);
        for (g, w) in got.iter().zip(want.iter()) {
            worst = worst.max(rel(*g, *w));
        }
    }
    worst
}

pub fn taylor_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * a / k as f64;
        sum += &term;
    }
    sum
}

/// Largest entrywise error over random matrices scaled to `||A||_1 = 0.5`.
pub fn expm_vs_taylor() -> f64 {
    let mut s = RngStream::new(9, 9);
    let mut worst: f64 = 0.0;
    for n in [1, 3, 4, 7] {
        let raw: Vec<f64> = (0..n * n).map(|_| s.normal(1.0)).collect();
        let dense = DMatrix::from_row_slice(n, n, &raw);
        let norm1 = (0..n).map(|j| dense.column(j).abs().sum()).fold(0.0, f64::max);
        let dense = dense * (0.5 / norm1);
        let rows: Vec<Vec<f64>> = (0..n).map(|i| dense.row(i).iter().copied().collect()).collect();
        let row_refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let got = matrix_exponential(&Matrix::from_rows(&row_refs).unwrap());
        let want = taylor_exp(&dense);
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(rel(got.get(i, j), want[(i, j)]));
            }
        }
    }
    worst
}

fn bayes_setup(seed: u64) -> (Dataset, LinearComputerModel, KernelSpec) {
    (
        random_data(20, 1, seed),
        LinearComputerModel::polynomial(3, 10.0).unwrap(),
        KernelSpec::matern32(0.3, 1).unwrap(),
    )
}

pub fn posterior_vs_joint_gaussian() -> f64 {
    let (data, model, kernel) = bayes_setup(10);
    let n = data.len();
    let tests: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64 / 14.0]).collect();
    let mut worst: f64 = 0.0;
    for (alpha, beta, sigma2) in [(1.0, 1.0, 0.04), (50.0, 0.5, 0.1), (1e4, 2.0, 0.01)] {
        let hyper = BayesHyper::new(alpha, beta, sigma2).unwrap();
        let got = posterior_mean_many(&data, &model, kernel, &hyper, &tests).unwrap();

        // Cov(Y) = α T T' + β (Σ + jitter I) + σ² I,  Cov(ζ(x), Y) = α h(x)' T' + β k(x)'
        let t = DMatrix::from_fn(n, 3, |i, j| model.features(&data.points()[i])[j]);
        let s = dense_gram(&kernel, data.points());
        let cov = &t * t.transpose() * alpha + &s * beta + DMatrix::identity(n, n) * sigma2;
        let w = cov.lu().solve(&DVector::from_column_slice(data.y())).unwrap();
        for (x, g) in tests.iter().zip(&got) {
            let h = DVector::from_vec(model.features(x));
            let cross_cov = &t * h * alpha + cross(&kernel, data.points(), x) * beta;
            worst = worst.max(rel(*g, cross_cov.dot(&w)));
        }
    }
    worst
}

pub fn partial_spline_vs_joint_minimization() -> f64 {
    let mut worst: f64 = 0.0;
    for (seed, lambda) in [(11, 1e-3), (12, 1e-2), (13, 0.2)] {
        let (data, model, kernel) = bayes_setup(seed);
        let n = data.len();
        let (theta, fit) = partial_spline_limit(&data, &model, kernel, lambda).unwrap();

        // minimize (1/n)||Y - Tθ - S c||^2 + λ c'Sc over (θ, c)
        let t = DMatrix::from_fn(n, 3, |i, j| model.features(&data.points()[i])[j]);
        let s = dense_gram(&kernel, data.points());
        let y = DVector::from_column_slice(data.y());
        let mut lhs = DMatrix::zeros(n + 3, n + 3);
        lhs.view_mut((0, 0), (3, 3)).copy_from(&(t.transpose() * &t));
        lhs.view_mut((0, 3), (3, n)).copy_from(&(t.transpose() * &s));
        lhs.view_mut((3, 0), (n, 3)).copy_from(&(&s * &t));
        lhs.view_mut((3, 3), (n, n)).copy_from(&(&s * &s + &s * (n as f64 * lambda)));
        let mut rhs = DVector::zeros(n + 3);
        rhs.rows_mut(0, 3).copy_from(&(t.transpose() * &y));
        rhs.rows_mut(3, n).copy_from(&(&s * &y));
        let sol = lhs.lu().solve(&rhs).unwrap();
        let (theta_o, c_o) = (sol.rows(0, 3).into_owned(), sol.rows(3, n).into_owned());

        for i in 0..=10 {
            let x = vec![i as f64 / 10.0];
            let got = model.eval(&x, &theta) + fit.predict_unchecked(&x);
            let want = DVector::from_vec(model.features(&x)).dot(&theta_o)
                + cross(&kernel, data.points(), &x).dot(&c_o);
            worst = worst.max(rel(got, want));
        }
    }
    worst
}
