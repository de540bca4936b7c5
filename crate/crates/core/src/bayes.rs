//! Gaussian-process posterior mean for a linear-in-θ computer model and its
//! flat-prior limit, the partial-spline estimator.
//!
//! Prior: `θ ~ N(0, α I)`, `δ ~ GP(0, β K)`, noise `N(0, σ²)`, and
//! `λ = σ² / (n β)`. Writing `M = Σ + nλ I`, `T_ij = h_j(X_i)` and
//! `G = T^T M^{-1} T`, the posterior mean is
//!
//! ```text
//! E[ζ(x) | Y] = h(x)^T θ_α + k(x)^T M^{-1} (Y - T θ_α),
//! θ_α = (β/α I + G)^{-1} T^T M^{-1} Y,
//! ```
//!
//! (the Woodbury form of the joint-Gaussian conditional), and as `α → ∞`
//! `θ_α → G^{-1} T^T M^{-1} Y`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bounds::ParamBox;
use crate::calibration::ComputerModel;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::{cholesky, dot, CholFactor, SymMatrix};
use crate::regression::{Dataset, DiscrepancyFit, RidgeSystem};
use crate::rng::RngStream;

pub type BasisFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `η(x, θ) = Σ_j θ_j h_j(x)`.
#[derive(Clone)]
pub struct LinearComputerModel {
    basis: Vec<BasisFn>,
    input_dim: usize,
    theta_box: ParamBox,
}

impl std::fmt::Debug for LinearComputerModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearComputerModel")
            .field("p", &self.basis.len())
            .field("input_dim", &self.input_dim)
            .finish()
    }
}

impl LinearComputerModel {
    /// Model with the parameter box `[-bound, bound]^p` used when it is
    /// calibrated as an ordinary [`ComputerModel`].
    pub fn new(input_dim: usize, basis: Vec<BasisFn>, bound: f64) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidInput("a linear model needs at least one basis function".into()));
        }
        let theta_box = ParamBox::cube(basis.len(), -bound, bound)?;
        Ok(Self {
            basis,
            input_dim,
            theta_box,
        })
    }

    /// Monomials `1, x, ..., x^{p-1}` of the first coordinate.
    pub fn polynomial(p: usize, bound: f64) -> Result<Self> {
        let basis = (0..p)
            .map(|j| Arc::new(move |x: &[f64]| x[0].powi(j as i32)) as BasisFn)
            .collect();
        Self::new(1, basis, bound)
    }

    pub fn p(&self) -> usize {
        self.basis.len()
    }

    /// `(h_1(x), ..., h_p(x))`.
    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|h| h(x)).collect()
    }

    /// Rows of the `n × p` basis matrix `T`.
    pub fn design(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        points.iter().map(|x| self.features(x)).collect()
    }
}

impl ComputerModel for LinearComputerModel {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        dot(&self.features(x), theta)
    }

    fn theta_box(&self) -> &ParamBox {
        &self.theta_box
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesHyper {
    /// Prior variance of each θ_j; may be `f64::INFINITY`.
    pub alpha: f64,
    /// Prior scale of the discrepancy process.
    pub beta: f64,
    /// Noise variance.
    pub sigma2: f64,
}

impl BayesHyper {
    pub fn new(alpha: f64, beta: f64, sigma2: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(beta > 0.0 && beta.is_finite()) || !(sigma2 > 0.0 && sigma2.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "hyperparameters must be positive: alpha={alpha}, beta={beta}, sigma2={sigma2}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            sigma2,
        })
    }

    /// `λ = σ² / (n β)`.
    pub fn lambda(&self, n: usize) -> f64 {
        self.sigma2 / (n as f64 * self.beta)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }
}

/// Shared pieces: `M` factor, `T`, `M^{-1} T`, `T^T M^{-1} Y`, `G`.
struct Projection {
    system: RidgeSystem,
    factor: CholFactor,
    design: Vec<Vec<f64>>,
    gram_weighted: SymMatrix,
    rhs: Vec<f64>,
}

impl Projection {
    fn new(data: &Dataset, model: &LinearComputerModel, kernel: KernelSpec, lambda: f64) -> Result<Self> {
        if model.input_dim != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim,
                got: data.dim(),
            });
        }
        let system = RidgeSystem::new(data.points(), kernel)?;
        let factor = system.penalized_factor(lambda)?;
        let design = model.design(data.points());
        let p = model.p();
        let n = data.len();
        // columns of M^{-1} T
        let mut minv_t = Vec::with_capacity(p);
        for j in 0..p {
            let col: Vec<f64> = (0..n).map(|i| design[i][j]).collect();
            minv_t.push(factor.solve(&col)?);
        }
        let gram_weighted = SymMatrix::from_fn(p, |a, b| {
            (0..n).map(|i| design[i][a] * minv_t[b][i]).sum()
        });
        let minv_y = factor.solve(data.y())?;
        let rhs = (0..p)
            .map(|j| (0..n).map(|i| design[i][j] * minv_y[i]).sum())
            .collect();
        Ok(Self {
            system,
            factor,
            design,
            gram_weighted,
            rhs,
        })
    }

    /// `(shift I + G)^{-1} T^T M^{-1} Y`.
    fn theta(&self, shift: f64) -> Result<Vec<f64>> {
        let mut g = self.gram_weighted.clone();
        g.add_diagonal(shift);
        let scale = (0..g.order()).map(|i| g.get(i, i)).fold(0.0, f64::max);
        let f = cholesky(&g).map_err(|_| Error::RankDeficientBasis)?;
        let min_pivot = f.min_diagonal();
        if min_pivot * min_pivot <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::RankDeficientBasis);
        }
        f.solve(&self.rhs)
    }

    fn fit_for(&self, data: &Dataset, theta: &[f64], lambda: f64) -> Result<DiscrepancyFit> {
        let residual: Vec<f64> = data
            .y()
            .iter()
            .zip(&self.design)
            .map(|(y, row)| y - dot(row, theta))
            .collect();
        self.system.fit_with_factor(&residual, lambda, &self.factor)
    }
}

/// Posterior mean `E[ζ(x) | Y]` for finite `α`.
pub fn posterior_mean(
    data: &Dataset,
    model: &LinearComputerModel,
    kernel: KernelSpec,
    hyper: &BayesHyper,
    x: &[f64],
) -> Result<f64> {
    Ok(posterior_mean_many(data, model, kernel, hyper, &[x.to_vec()])?[0])
}

/// Posterior mean at several points, sharing one factorization.
pub fn posterior_mean_many(
    data: &Dataset,
    model: &LinearComputerModel,
    kernel: KernelSpec,
    hyper: &BayesHyper,
    xs: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if !hyper.alpha.is_finite() {
        return Err(Error::InvalidInput(
            "posterior_mean needs finite alpha; use partial_spline_limit for the limit".into(),
        ));
    }
    let lambda = hyper.lambda(data.len());
    let proj = Projection::new(data, model, kernel, lambda)?;
    let theta = proj.theta(hyper.beta / hyper.alpha)?;
    let fit = proj.fit_for(data, &theta, lambda)?;
    Ok(xs
        .iter()
        .map(|x| model.eval(x, &theta) + fit.predict_unchecked(x))
        .collect())
}

/// Joint minimizer of `(1/n) Σ [Y_i - Σ_j θ_j h_j(X_i) - δ(X_i)]^2 + λ ||δ||_H^2`:
/// `θ̂ = G^{-1} T^T M^{-1} Y`, `c = M^{-1}(Y - T θ̂)`.
pub fn partial_spline_limit(
    data: &Dataset,
    model: &LinearComputerModel,
    kernel: KernelSpec,
    lambda: f64,
) -> Result<(Vec<f64>, DiscrepancyFit)> {
    let proj = Projection::new(data, model, kernel, lambda)?;
    let theta = proj.theta(0.0)?;
    let fit = proj.fit_for(data, &theta, lambda)?;
    Ok((theta, fit))
}

/// For each `α`, the largest gap over `test_points` between the posterior
/// mean and the partial-spline predictor at `λ = σ²/(nβ)`.
pub fn verify_proposition_limit(
    data: &Dataset,
    model: &LinearComputerModel,
    kernel: KernelSpec,
    hyper: &BayesHyper,
    alphas: &[f64],
    test_points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("alpha grid must be increasing".into()));
    }
    let lambda = hyper.lambda(data.len());
    let (theta, fit) = partial_spline_limit(data, model, kernel, lambda)?;
    let limit: Vec<f64> = test_points
        .iter()
        .map(|x| model.eval(x, &theta) + fit.predict_unchecked(x))
        .collect();
    alphas
        .iter()
        .map(|&alpha| {
            let post = posterior_mean_many(data, model, kernel, &hyper.with_alpha(alpha), test_points)?;
            Ok(post
                .iter()
                .zip(&limit)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

/// A random test instance for the flat-prior limit: `n` uniform inputs on
/// `[0,1]`, a degree-`p-1` polynomial model and a nonlinear response.
#[derive(Debug, Clone)]
pub struct PropositionInstance {
    pub data: Dataset,
    pub model: LinearComputerModel,
    pub kernel: KernelSpec,
    pub hyper: BayesHyper,
    pub test_points: Vec<Vec<f64>>,
}

impl PropositionInstance {
    pub fn random(n: usize, p: usize, test_points: usize, stream: &mut RngStream) -> Result<Self> {
        let hyper = BayesHyper::new(1.0, 1.0, 0.01)?;
        let points: Vec<Vec<f64>> = (0..n).map(|_| stream.uniform(1)).collect();
        let y = points
            .iter()
            .map(|x| 0.5 + x[0] - x[0] * x[0] + (2.0 * PI * x[0]).sin() + stream.normal(hyper.sigma2.sqrt()))
            .collect();
        Ok(Self {
            data: Dataset::new(points, y)?,
            model: LinearComputerModel::polynomial(p, 10.0)?,
            kernel: KernelSpec::matern32(0.3, 1)?,
            hyper,
            test_points: (0..test_points).map(|_| stream.uniform(1)).collect(),
        })
    }

    /// Largest gap to the limit for each `α`, relative to the largest
    /// absolute limit prediction.
    pub fn relative_deviations(&self, alphas: &[f64]) -> Result<Vec<f64>> {
        let lambda = self.hyper.lambda(self.data.len());
        let (theta, fit) = partial_spline_limit(&self.data, &self.model, self.kernel, lambda)?;
        let scale = self
            .test_points
            .iter()
            .map(|x| (self.model.eval(x, &theta) + fit.predict_unchecked(x)).abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let dev = verify_proposition_limit(
            &self.data,
            &self.model,
            self.kernel,
            &self.hyper,
            alphas,
            &self.test_points,
        )?;
        Ok(dev.into_iter().map(|d| d / scale).collect())
    }
}
