//! Frequentist calibrators: least squares, L2, and the prediction-oriented
//! calibration that minimizes the RKHS norm of the discrepancy.
//!
//! The prediction-oriented calibrator minimizes, jointly over `θ ∈ Θ` and
//! `δ ∈ H`,
//!
//! ```text
//! L(θ, δ) = (1/n) Σ_i [Y_i - η(X_i, θ) - δ(X_i)]^2 + λ ||δ||_H^2
//! ```
//!
//! by alternating an exact ridge solve for `δ` with a box-constrained search
//! over `θ` of the profiled objective `r(θ)^T (Σ + nλ I)^{-1} r(θ)`,
//! `r(θ) = Y - η(X, θ)`. Profiling is exact: `min_δ L(θ, δ) = λ r^T (Σ + nλ I)^{-1} r`.

use std::fmt;
use std::sync::Arc;

use crate::bounds::ParamBox;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::optimize::{minimize_box, DEFAULT_STARTS};
use crate::regression::{default_lambda_grid, Dataset, DiscrepancyFit, RidgeSystem};
use crate::rng::RngStream;

/// A deterministic parametric simulator `η(x, θ)` on `[0,1]^d × Θ`.
pub trait ComputerModel: Send + Sync {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64;

    fn theta_box(&self) -> &ParamBox;

    fn input_dim(&self) -> usize;

    fn param_dim(&self) -> usize {
        self.theta_box().dim()
    }

    /// `η(X_i, θ)` for every design point.
    fn eval_design(&self, points: &[Vec<f64>], theta: &[f64]) -> Vec<f64> {
        points.iter().map(|x| self.eval(x, theta)).collect()
    }
}

impl<M: ComputerModel + ?Sized> ComputerModel for Arc<M> {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        (**self).eval(x, theta)
    }

    fn theta_box(&self) -> &ParamBox {
        (**self).theta_box()
    }

    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
}

/// A computer model backed by a closure.
pub struct FnModel<F> {
    f: F,
    theta_box: ParamBox,
    input_dim: usize,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
{
    pub fn new(input_dim: usize, theta_box: ParamBox, f: F) -> Self {
        Self {
            f,
            theta_box,
            input_dim,
        }
    }
}

impl<F> ComputerModel for FnModel<F>
where
    F: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        (self.f)(x, theta)
    }

    fn theta_box(&self) -> &ParamBox {
        &self.theta_box
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    LeastSquares,
    L2,
    OptPredOneStep,
    OptPredFull,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::LeastSquares => "LS",
            Method::L2 => "L2",
            Method::OptPredOneStep => "OptPred-OneStep",
            Method::OptPredFull => "OptPred-Full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptPredMode {
    OneStep,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerDiagnostics {
    pub starts: usize,
    pub evaluations: usize,
    pub best_objective: f64,
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub theta_hat: Vec<f64>,
    pub method: Method,
    pub discrepancy: Option<DiscrepancyFit>,
    pub lambda_used: Option<f64>,
    /// For the prediction-oriented methods, the joint objective after the
    /// initial ridge fit and after every (θ-step, δ-step) pair.
    pub objective_trace: Vec<f64>,
    pub diagnostics: OptimizerDiagnostics,
}

impl CalibrationResult {
    /// `η(x, θ̂) + δ̂(x)`, or `η(x, θ̂)` when no discrepancy was fitted.
    pub fn predict(&self, model: &dyn ComputerModel, x: &[f64]) -> f64 {
        let base = model.eval(x, &self.theta_hat);
        match &self.discrepancy {
            Some(fit) => base + fit.predict_unchecked(x),
            None => base,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationOptions {
    pub starts: usize,
    pub lambda_grid: Vec<f64>,
    /// Outer iterations for [`OptPredMode::Full`].
    pub max_outer: usize,
    /// Relative decrease below which full mode stops.
    pub outer_tol: f64,
    /// Monte Carlo points for the L2 calibrator's integral.
    pub mc_points: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            starts: DEFAULT_STARTS,
            lambda_grid: default_lambda_grid(),
            max_outer: 10,
            outer_tol: 1e-8,
            mc_points: 4096,
        }
    }
}

// stream tags
const TAG_LS: u64 = 1;
const TAG_L2_MC: u64 = 2;
const TAG_L2_OPT: u64 = 3;
const TAG_OPT_STEP: u64 = 4;

fn check_model(data: &Dataset, model: &dyn ComputerModel) -> Result<()> {
    if model.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            got: data.dim(),
        });
    }
    Ok(())
}

/// Least-squares calibration: `argmin_θ (1/n) Σ_i [Y_i - η(X_i, θ)]^2`.
pub fn calibrate_ls(
    data: &Dataset,
    model: &dyn ComputerModel,
    options: &CalibrationOptions,
    stream: &RngStream,
) -> Result<CalibrationResult> {
    check_model(data, model)?;
    let n = data.len() as f64;
    let objective = |theta: &[f64]| {
        data.points()
            .iter()
            .zip(data.y())
            .map(|(x, y)| {
                let r = y - model.eval(x, theta);
                r * r
            })
            .sum::<f64>()
            / n
    };
    let opt = minimize_box(
        objective,
        model.theta_box(),
        options.starts,
        &stream.derive(TAG_LS),
        &[],
    )?;
    Ok(CalibrationResult {
        theta_hat: opt.point,
        method: Method::LeastSquares,
        discrepancy: None,
        lambda_used: None,
        objective_trace: vec![opt.value],
        diagnostics: OptimizerDiagnostics {
            starts: opt.starts,
            evaluations: opt.evaluations,
            best_objective: opt.value,
        },
    })
}

/// L2 calibration: fit `ζ̂` by GCV-tuned kernel ridge regression, then
/// minimize a Monte Carlo estimate of `||ζ̂ - η(·, θ)||_{L2}^2` over a fixed
/// uniform point set.
pub fn calibrate_l2(
    data: &Dataset,
    model: &dyn ComputerModel,
    kernel: KernelSpec,
    options: &CalibrationOptions,
    stream: &RngStream,
) -> Result<CalibrationResult> {
    check_model(data, model)?;
    if options.mc_points < 100 {
        return Err(Error::InvalidInput(format!(
            "L2 calibration needs at least 100 Monte Carlo points, got {}",
            options.mc_points
        )));
    }
    let system = RidgeSystem::new(data.points(), kernel)?;
    let lambda = system.select_lambda(data.y(), &options.lambda_grid)?;
    let zeta_hat = system.fit(data.y(), lambda)?;
    calibrate_l2_against(&zeta_hat, data.dim(), model, options, stream)
}

/// L2 calibration against an already fitted nonparametric estimate.
pub fn calibrate_l2_against(
    zeta_hat: &DiscrepancyFit,
    dim: usize,
    model: &dyn ComputerModel,
    options: &CalibrationOptions,
    stream: &RngStream,
) -> Result<CalibrationResult> {
    let mut mc = stream.derive(TAG_L2_MC);
    let points: Vec<Vec<f64>> = (0..options.mc_points).map(|_| mc.uniform(dim)).collect();
    let targets: Vec<f64> = points.iter().map(|x| zeta_hat.predict_unchecked(x)).collect();
    let m = points.len() as f64;
    let objective = |theta: &[f64]| {
        points
            .iter()
            .zip(&targets)
            .map(|(x, t)| {
                let r = t - model.eval(x, theta);
                r * r
            })
            .sum::<f64>()
            / m
    };
    let opt = minimize_box(
        objective,
        model.theta_box(),
        options.starts,
        &stream.derive(TAG_L2_OPT),
        &[],
    )?;
    Ok(CalibrationResult {
        theta_hat: opt.point,
        method: Method::L2,
        discrepancy: None,
        lambda_used: Some(zeta_hat.lambda()),
        objective_trace: vec![opt.value],
        diagnostics: OptimizerDiagnostics {
            starts: opt.starts,
            evaluations: opt.evaluations,
            best_objective: opt.value,
        },
    })
}

/// `(Y - η(X, θ))^T (Σ + nλ I)^{-1} (Y - η(X, θ))`.
pub fn weighted_objective(
    data: &Dataset,
    model: &dyn ComputerModel,
    kernel: KernelSpec,
    lambda: f64,
    theta: &[f64],
) -> Result<f64> {
    check_model(data, model)?;
    let eta = model.eval_design(data.points(), theta);
    let residual = data.residual(Some(&eta))?;
    RidgeSystem::new(data.points(), kernel)?.weighted_norm_sq(&residual, lambda)
}

/// Ridge fit of `Y - η(X, θ)` with a GCV-selected penalty.
pub fn fit_discrepancy_gcv(
    data: &Dataset,
    model: &dyn ComputerModel,
    kernel: KernelSpec,
    theta: &[f64],
    lambda_grid: &[f64],
) -> Result<DiscrepancyFit> {
    check_model(data, model)?;
    let eta = model.eval_design(data.points(), theta);
    let residual = data.residual(Some(&eta))?;
    let system = RidgeSystem::new(data.points(), kernel)?;
    let lambda = system.select_lambda(&residual, lambda_grid)?;
    system.fit(&residual, lambda)
}

/// Prediction-oriented calibration.
///
/// 1. `θ` from least squares;
/// 2. ridge fit of the discrepancy at `θ` with GCV-selected `λ`, which is
///    then frozen;
/// 3. `θ` minimizing the weighted objective (the incoming `θ` is one of the
///    optimizer's starts);
/// 4. ridge refit at the new `θ`.
///
/// One-step mode runs steps 3–4 once. Full mode repeats them until the joint
/// objective drops by less than `outer_tol` relative, or `max_outer` rounds.
pub fn calibrate_optpred(
    data: &Dataset,
    model: &dyn ComputerModel,
    kernel: KernelSpec,
    mode: OptPredMode,
    options: &CalibrationOptions,
    stream: &RngStream,
) -> Result<CalibrationResult> {
    let ls = calibrate_ls(data, model, options, stream)?;
    calibrate_optpred_from(data, model, kernel, mode, options, stream, &ls.theta_hat, None)
}

/// Steps 2–4 of [`calibrate_optpred`] from a given starting `θ`. When
/// `lambda` is `None` it is chosen by GCV at `theta0`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_optpred_from(
    data: &Dataset,
    model: &dyn ComputerModel,
    kernel: KernelSpec,
    mode: OptPredMode,
    options: &CalibrationOptions,
    stream: &RngStream,
    theta0: &[f64],
    lambda: Option<f64>,
) -> Result<CalibrationResult> {
    check_model(data, model)?;
    if mode == OptPredMode::Full && options.max_outer == 0 {
        return Err(Error::InvalidInput("max_outer must be at least 1".into()));
    }
    let system = RidgeSystem::new(data.points(), kernel)?;
    let residual_at = |theta: &[f64]| -> Vec<f64> {
        data.y()
            .iter()
            .zip(data.points())
            .map(|(y, x)| y - model.eval(x, theta))
            .collect()
    };

    let mut theta = theta0.to_vec();
    let r0 = residual_at(&theta);
    let lambda = match lambda {
        Some(l) => l,
        None => system.select_lambda(&r0, &options.lambda_grid)?,
    };
    let factor = system.penalized_factor(lambda)?;
    let mut fit = system.fit_with_factor(&r0, lambda, &factor)?;
    let mut trace = vec![fit.lagrangian()];

    let rounds = match mode {
        OptPredMode::OneStep => 1,
        OptPredMode::Full => options.max_outer,
    };
    let mut starts_total = 0;
    let mut evaluations = 0;
    let mut best_objective = f64::NAN;
    for round in 0..rounds {
        let weighted = |t: &[f64]| {
            let r = residual_at(t);
            factor.inv_quad_form(&r).unwrap_or(f64::NAN)
        };
        let opt = minimize_box(
            weighted,
            model.theta_box(),
            options.starts,
            &stream.derive(TAG_OPT_STEP).derive(round as u64),
            &[theta.clone()],
        )?;
        starts_total += opt.starts;
        evaluations += opt.evaluations;
        best_objective = opt.value;
        theta = opt.point;
        fit = system.fit_with_factor(&residual_at(&theta), lambda, &factor)?;
        let value = fit.lagrangian();
        let previous = *trace.last().expect("trace starts nonempty");
        trace.push(value);
        if mode == OptPredMode::Full && previous - value < options.outer_tol * previous.abs() {
            break;
        }
    }

    Ok(CalibrationResult {
        theta_hat: theta,
        method: match mode {
            OptPredMode::OneStep => Method::OptPredOneStep,
            OptPredMode::Full => Method::OptPredFull,
        },
        discrepancy: Some(fit),
        lambda_used: Some(lambda),
        objective_trace: trace,
        diagnostics: OptimizerDiagnostics {
            starts: starts_total,
            evaluations,
            best_objective,
        },
    })
}
