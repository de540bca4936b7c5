//! Kernel ridge regression in the RKHS: the representer-coefficient solver,
//! prediction, and GCV selection of the penalty.
//!
//! For residuals `r` (the responses minus the computer model, or the raw
//! responses for the nonparametric fit) the estimator minimizes
//!
//! ```text
//! (1/n) Σ_i [r_i - h(X_i)]^2 + λ ||h||_H^2
//! ```
//!
//! whose solution is `h = Σ_i c_i K(X_i, ·)` with `c = (Σ + nλ I)^{-1} r`.

use crate::error::{Error, Result};
use crate::kernels::{gram, GramMatrix, KernelSpec, DEFAULT_JITTER};
use crate::linalg::{dot, CholFactor};
use crate::par;

/// Physical observations `(X_i, Y_i)` with `X_i ∈ [0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if points.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: y.len(),
            });
        }
        if points.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a dataset needs at least 2 observations, got {}",
                points.len()
            )));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::InvalidInput("design points must have dimension >= 1".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidInput(format!(
                    "design point {i} lies outside [0,1]^{d}: {p:?}"
                )));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("responses must be finite".into()));
        }
        Ok(Self { points, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Sub-dataset with the listed rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            points: rows.iter().map(|&i| self.points[i].clone()).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// `Y - η(X)`, or `Y` when `eta_at_x` is `None`.
    pub fn residual(&self, eta_at_x: Option<&[f64]>) -> Result<Vec<f64>> {
        match eta_at_x {
            None => Ok(self.y.clone()),
            Some(eta) => {
                if eta.len() != self.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.len(),
                        got: eta.len(),
                    });
                }
                Ok(self.y.iter().zip(eta).map(|(y, e)| y - e).collect())
            }
        }
    }
}

/// 60 log-spaced values on `[1e-8, 1e1]`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1e-8, 1e1, 60)
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Fitted discrepancy `δ̂(·) = Σ_i c_i K(X_i, ·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyFit {
    coefficients: Vec<f64>,
    lambda: f64,
    kernel: KernelSpec,
    points: Vec<Vec<f64>>,
    residual_y: Vec<f64>,
    jitter: f64,
}

impl DiscrepancyFit {
    /// A fit with caller-supplied coefficients (used to reload saved fits).
    pub fn from_parts(
        kernel: KernelSpec,
        points: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
        lambda: f64,
        residual_y: Vec<f64>,
        jitter: f64,
    ) -> Result<Self> {
        if coefficients.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: coefficients.len(),
            });
        }
        Ok(Self {
            coefficients,
            lambda,
            kernel,
            points,
            residual_y,
            jitter,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn residual_y(&self) -> &[f64] {
        &self.residual_y
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn predict_unchecked(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(&self.coefficients)
            .map(|(p, c)| c * self.kernel.eval_unchecked(p, x))
            .sum()
    }

    /// `Σ_i c_i K(X_i, x)`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.kernel.dim(),
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    /// `Σ c`, the fit evaluated at its own training points.
    pub fn fitted_values(&self) -> Vec<f64> {
        let sigma = self.jittered_gram();
        (0..self.points.len())
            .map(|i| dot(sigma.row(i), &self.coefficients))
            .collect()
    }

    /// `c^T Σ c`, the squared RKHS norm of the fitted function.
    pub fn rkhs_norm_sq(&self) -> f64 {
        let fitted = self.fitted_values();
        dot(&fitted, &self.coefficients)
    }

    /// `(1/n) ||r - Σ c||^2 + λ c^T Σ c`, evaluated directly.
    pub fn lagrangian(&self) -> f64 {
        let n = self.points.len() as f64;
        let fitted = self.fitted_values();
        let rss: f64 = self
            .residual_y
            .iter()
            .zip(&fitted)
            .map(|(r, f)| (r - f) * (r - f))
            .sum();
        rss / n + self.lambda * dot(&fitted, &self.coefficients)
    }

    /// `||(Σ + nλ I) c - r|| / ||r||` (absolute when `r = 0`).
    pub fn coefficient_residual(&self) -> f64 {
        let n = self.points.len() as f64;
        let fitted = self.fitted_values();
        let num: f64 = fitted
            .iter()
            .zip(&self.coefficients)
            .zip(&self.residual_y)
            .map(|((f, c), r)| (f + n * self.lambda * c - r).powi(2))
            .sum::<f64>()
            .sqrt();
        let den = dot(&self.residual_y, &self.residual_y).sqrt();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }

    fn jittered_gram(&self) -> crate::linalg::SymMatrix {
        let mut m = crate::kernels::kernel_matrix(&self.kernel, &self.points)
            .expect("fit points match kernel dimension");
        m.add_diagonal(self.jitter);
        m
    }
}

/// Kernel matrix of a fixed design, reused across residual vectors and penalties.
#[derive(Debug, Clone)]
pub struct RidgeSystem {
    points: Vec<Vec<f64>>,
    kernel: KernelSpec,
    gram: GramMatrix,
}

impl RidgeSystem {
    pub fn new(points: &[Vec<f64>], kernel: KernelSpec) -> Result<Self> {
        Self::with_jitter(points, kernel, DEFAULT_JITTER)
    }

    pub fn with_jitter(points: &[Vec<f64>], kernel: KernelSpec, jitter: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("ridge system needs at least one point".into()));
        }
        let gram = gram(&kernel, points, jitter)?;
        Ok(Self {
            points: points.to_vec(),
            kernel,
            gram,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// Factor of `Σ + nλ I` (jitter included).
    pub fn penalized_factor(&self, lambda: f64) -> Result<CholFactor> {
        check_lambda(lambda)?;
        self.gram.shifted_factor(self.len() as f64 * lambda)
    }

    fn check_residual(&self, residual: &[f64]) -> Result<()> {
        if residual.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: residual.len(),
            });
        }
        Ok(())
    }

    /// Solves `(Σ + nλ I) c = r`.
    pub fn fit(&self, residual: &[f64], lambda: f64) -> Result<DiscrepancyFit> {
        self.check_residual(residual)?;
        let factor = self.penalized_factor(lambda)?;
        self.fit_with_factor(residual, lambda, &factor)
    }

    pub fn fit_with_factor(
        &self,
        residual: &[f64],
        lambda: f64,
        factor: &CholFactor,
    ) -> Result<DiscrepancyFit> {
        let coefficients = factor.solve(residual)?;
        Ok(DiscrepancyFit {
            coefficients,
            lambda,
            kernel: self.kernel,
            points: self.points.clone(),
            residual_y: residual.to_vec(),
            jitter: self.gram.jitter(),
        })
    }

    /// `r^T (Σ + nλ I)^{-1} r`.
    pub fn weighted_norm_sq(&self, residual: &[f64], lambda: f64) -> Result<f64> {
        self.check_residual(residual)?;
        self.penalized_factor(lambda)?.inv_quad_form(residual)
    }

    /// GCV score at `lambda`.
    ///
    /// With `M = Σ + nλ I` and `c = M^{-1} r`, the residual `r - A r` equals
    /// `nλ c` and `tr(I - A) = nλ tr(M^{-1})`.
    pub fn gcv(&self, residual: &[f64], lambda: f64) -> Result<f64> {
        self.check_residual(residual)?;
        let factor = self.penalized_factor(lambda)?;
        let n = self.len() as f64;
        let n_lambda = n * lambda;
        let c = factor.solve(residual)?;
        let trace_complement = n_lambda * factor.inverse_trace();
        if trace_complement <= 1e-12 * n {
            return Err(Error::DegenerateTrace {
                lambda,
                trace: trace_complement,
            });
        }
        let rss = n_lambda * n_lambda * dot(&c, &c);
        let mean_trace = trace_complement / n;
        Ok((rss / n) / (mean_trace * mean_trace))
    }

    /// Grid point with the smallest GCV score; ties go to the larger penalty.
    pub fn select_lambda(&self, residual: &[f64], grid: &[f64]) -> Result<f64> {
        if grid.is_empty() {
            return Err(Error::InvalidInput("lambda grid is empty".into()));
        }
        for &l in grid {
            check_lambda(l)?;
        }
        let scores = par::map_slice(grid, |&l| self.gcv(residual, l));
        let mut best: Option<(f64, f64)> = None;
        for (&lambda, score) in grid.iter().zip(scores) {
            let score = match score {
                Ok(s) if s.is_finite() => s,
                Ok(_) | Err(Error::DegenerateTrace { .. }) | Err(Error::NotPositiveDefinite { .. }) => {
                    continue
                }
                Err(e) => return Err(e),
            };
            best = match best {
                None => Some((lambda, score)),
                Some((bl, bs)) => {
                    if score < bs || (score == bs && lambda > bl) {
                        Some((lambda, score))
                    } else {
                        Some((bl, bs))
                    }
                }
            };
        }
        best.map(|(l, _)| l).ok_or(Error::AllDegenerate)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")))
    }
}

/// Ridge fit of `Y - η(X)` (or of `Y` when `eta_at_x` is `None`).
pub fn fit_ridge(
    data: &Dataset,
    eta_at_x: Option<&[f64]>,
    kernel: KernelSpec,
    lambda: f64,
) -> Result<DiscrepancyFit> {
    let residual = data.residual(eta_at_x)?;
    RidgeSystem::new(data.points(), kernel)?.fit(&residual, lambda)
}

pub fn predict_discrepancy(fit: &DiscrepancyFit, x: &[f64]) -> Result<f64> {
    fit.predict(x)
}

pub fn gcv_score(
    data: &Dataset,
    eta_at_x: Option<&[f64]>,
    kernel: KernelSpec,
    lambda: f64,
) -> Result<f64> {
    let residual = data.residual(eta_at_x)?;
    RidgeSystem::new(data.points(), kernel)?.gcv(&residual, lambda)
}

pub fn select_lambda_gcv(
    data: &Dataset,
    eta_at_x: Option<&[f64]>,
    kernel: KernelSpec,
    grid: &[f64],
) -> Result<f64> {
    let residual = data.residual(eta_at_x)?;
    RidgeSystem::new(data.points(), kernel)?.select_lambda(&residual, grid)
}

/// Fits with the GCV-selected penalty.
pub fn fit_ridge_gcv(
    data: &Dataset,
    eta_at_x: Option<&[f64]>,
    kernel: KernelSpec,
    grid: &[f64],
) -> Result<DiscrepancyFit> {
    let residual = data.residual(eta_at_x)?;
    let system = RidgeSystem::new(data.points(), kernel)?;
    let lambda = system.select_lambda(&residual, grid)?;
    system.fit(&residual, lambda)
}
