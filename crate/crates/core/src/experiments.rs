//! Replication harness: data generation, kernel-scale selection, calibration,
//! prediction and PMSE aggregation over seeded replicates.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::calibration::{
    calibrate_l2_against, calibrate_ls, calibrate_optpred_from, fit_discrepancy_gcv,
    CalibrationOptions, ComputerModel, OptPredMode,
};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::models::{generate_dataset, NamedSystem, SystemId};
use crate::par;
use crate::regression::{log_grid, Dataset, DiscrepancyFit, RidgeSystem};
use crate::rng::{RngStream, DEFAULT_SEED};

/// The four compared predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredictorMethod {
    /// `η(·, θ̂_L2)` with no discrepancy term.
    NoBiasCorr,
    /// Kernel ridge regression of `Y` alone.
    Np,
    /// `η(·, θ̂_ls) + δ̂(·, θ̂_ls)`.
    LsCal,
    /// `η(·, θ̂_opt) + δ̂(·, θ̂_opt)`.
    OptCal,
}

impl PredictorMethod {
    pub const ALL: [PredictorMethod; 4] = [
        PredictorMethod::NoBiasCorr,
        PredictorMethod::Np,
        PredictorMethod::LsCal,
        PredictorMethod::OptCal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PredictorMethod::NoBiasCorr => "NoBiasCorr",
            PredictorMethod::Np => "NP",
            PredictorMethod::LsCal => "LSCal",
            PredictorMethod::OptCal => "OptCal",
        }
    }
}

impl fmt::Display for PredictorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PredictorMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "nobiascorr" => Ok(PredictorMethod::NoBiasCorr),
            "np" => Ok(PredictorMethod::Np),
            "lscal" => Ok(PredictorMethod::LsCal),
            "optcal" => Ok(PredictorMethod::OptCal),
            _ => Err(Error::InvalidInput(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiPolicy {
    /// Five-fold cross-validation over the ψ grid.
    Cv5,
    Fixed(f64),
}

/// Default CV grid for ψ, scaled by `√d`.
pub fn default_psi_grid(dim: usize) -> Vec<f64> {
    let s = (dim as f64).sqrt();
    [0.05, 0.1, 0.2, 0.3, 0.5, 1.0].iter().map(|p| p * s).collect()
}

/// Everything `build_predictors` needs besides the data and the model.
#[derive(Debug, Clone)]
pub struct PredictorSettings {
    pub methods: Vec<PredictorMethod>,
    pub psi_policy: PsiPolicy,
    pub psi_grid: Vec<f64>,
    pub calibration: CalibrationOptions,
    pub optpred_mode: OptPredMode,
}

impl PredictorSettings {
    pub fn new(dim: usize) -> Self {
        Self {
            methods: PredictorMethod::ALL.to_vec(),
            psi_policy: PsiPolicy::Cv5,
            psi_grid: default_psi_grid(dim),
            calibration: CalibrationOptions::default(),
            optpred_mode: OptPredMode::OneStep,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub system: SystemId,
    pub n: usize,
    pub sigma2: Vec<f64>,
    pub replicates: usize,
    pub mc_test_points: usize,
    pub predictors: PredictorSettings,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `system`.
    pub fn new(system: SystemId) -> Self {
        let dim = NamedSystem::new(system).dim();
        let (n, sigma2) = match system {
            SystemId::Ex1 => (50, vec![0.1, 0.25, 0.5, 1.0]),
            SystemId::Ex2 => (50, vec![0.03, 0.05, 0.07, 0.1]),
            SystemId::Ex3 => (30, vec![0.1, 0.2, 0.4, 0.8]),
            SystemId::Ion => (19, vec![]),
        };
        let mut predictors = PredictorSettings::new(dim);
        if system == SystemId::Ex3 {
            predictors.psi_policy = PsiPolicy::Fixed(1.0);
        }
        Self {
            system,
            n,
            sigma2,
            replicates: 100,
            mc_test_points: 100_000,
            predictors,
            seed: DEFAULT_SEED,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidInput("replicates must be at least 1".into()));
        }
        if self.mc_test_points < 1000 {
            return Err(Error::InvalidInput("mc_test_points must be at least 1000".into()));
        }
        if self.predictors.methods.is_empty() {
            return Err(Error::InvalidInput("methods must be nonempty".into()));
        }
        if self.sigma2.is_empty() || self.sigma2.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidInput("sigma2 must be a nonempty list of nonnegative values".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidInput("n must be at least 2".into()));
        }
        if !NamedSystem::new(self.system).has_truth() {
            return Err(Error::NoTruthAvailable(self.system.to_string()));
        }
        if self.predictors.psi_grid.is_empty() {
            return Err(Error::InvalidInput("psi_grid must be nonempty".into()));
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment, lists are comma-separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            entries.push((i + 1, k.trim().to_ascii_lowercase(), v.trim().to_owned()));
        }
        let system = entries
            .iter()
            .find(|(_, k, _)| k == "system")
            .map(|(line, _, v)| {
                v.parse::<SystemId>().map_err(|e| Error::Parse {
                    line: *line,
                    message: e.to_string(),
                })
            })
            .transpose()?
            .unwrap_or(SystemId::Ex1);
        let mut cfg = Self::new(system);
        let (mut lmin, mut lmax, mut lcount) = (1e-8, 1e1, 60usize);
        let mut psi_grid_set = false;
        for (line, key, value) in entries {
            let perr = |message: String| Error::Parse { line, message };
            let num = |v: &str| v.parse::<f64>().map_err(|e| perr(format!("`{v}`: {e}")));
            let int = |v: &str| v.parse::<usize>().map_err(|e| perr(format!("`{v}`: {e}")));
            let list = |v: &str| -> Result<Vec<f64>> {
                v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(s.trim())).collect()
            };
            match key.as_str() {
                "system" => {}
                "n" => cfg.n = int(&value)?,
                "sigma2" => cfg.sigma2 = list(&value)?,
                "replicates" => cfg.replicates = int(&value)?,
                "mc_test_points" => cfg.mc_test_points = int(&value)?,
                "methods" => {
                    cfg.predictors.methods = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| s.parse().map_err(|e: Error| perr(e.to_string())))
                        .collect::<Result<Vec<_>>>()?;
                    cfg.predictors.methods.sort();
                    cfg.predictors.methods.dedup();
                }
                "psi" => {
                    cfg.predictors.psi_policy = match value.to_ascii_lowercase().as_str() {
                        "cv5" => PsiPolicy::Cv5,
                        v => PsiPolicy::Fixed(num(v.strip_prefix("fixed:").unwrap_or(v))?),
                    }
                }
                "psi_grid" => {
                    cfg.predictors.psi_grid = list(&value)?;
                    psi_grid_set = true;
                }
                "lambda_min" => lmin = num(&value)?,
                "lambda_max" => lmax = num(&value)?,
                "lambda_count" => lcount = int(&value)?,
                "starts" => cfg.predictors.calibration.starts = int(&value)?,
                "l2_mc_points" => cfg.predictors.calibration.mc_points = int(&value)?,
                "max_outer" => cfg.predictors.calibration.max_outer = int(&value)?,
                "optpred_mode" => {
                    cfg.predictors.optpred_mode = match value.to_ascii_lowercase().as_str() {
                        "one_step" | "onestep" => OptPredMode::OneStep,
                        "full" => OptPredMode::Full,
                        other => return Err(perr(format!("unknown optpred_mode `{other}`"))),
                    }
                }
                "seed" => cfg.seed = value.parse().map_err(|e| perr(format!("`{value}`: {e}")))?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                other => return Err(perr(format!("unknown key `{other}`"))),
            }
        }
        if !(lmin > 0.0 && lmax >= lmin && lcount >= 1) {
            return Err(Error::InvalidInput("bad lambda grid bounds".into()));
        }
        cfg.predictors.calibration.lambda_grid = log_grid(lmin, lmax, lcount);
        if !psi_grid_set {
            cfg.predictors.psi_grid = default_psi_grid(NamedSystem::new(cfg.system).dim());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Picks ψ by five-fold cross-validation of the GCV-tuned ridge fit of
/// `Y - η(X)` (or `Y`). Ties go to the larger ψ.
pub fn cv5_select_psi(
    data: &Dataset,
    family: KernelFamily,
    psi_grid: &[f64],
    eta_at_x: Option<&[f64]>,
    lambda_grid: &[f64],
    stream: &RngStream,
) -> Result<f64> {
    if psi_grid.is_empty() {
        return Err(Error::InvalidInput("psi grid is empty".into()));
    }
    if psi_grid.len() == 1 {
        return Ok(psi_grid[0]);
    }
    const FOLDS: usize = 5;
    let n = data.len();
    if n < FOLDS {
        return Err(Error::InvalidInput(format!("five-fold CV needs n >= 5, got {n}")));
    }
    let residual = data.residual(eta_at_x)?;
    let perm = stream.clone().permutation(n);
    let folds: Vec<(Vec<usize>, Vec<usize>)> = (0..FOLDS)
        .map(|k| {
            let (test, train): (Vec<(usize, usize)>, Vec<(usize, usize)>) =
                perm.iter().copied().enumerate().partition(|(i, _)| i % FOLDS == k);
            (
                train.into_iter().map(|(_, r)| r).collect(),
                test.into_iter().map(|(_, r)| r).collect(),
            )
        })
        .collect();

    let scores = par::map_slice(psi_grid, |&psi| -> Result<f64> {
        let kernel = KernelSpec::new(family, psi, data.dim())?;
        let mut total = 0.0;
        for (train, test) in &folds {
            let points: Vec<Vec<f64>> = train.iter().map(|&i| data.points()[i].clone()).collect();
            let r: Vec<f64> = train.iter().map(|&i| residual[i]).collect();
            let system = RidgeSystem::new(&points, kernel)?;
            let lambda = system.select_lambda(&r, lambda_grid)?;
            let fit = system.fit(&r, lambda)?;
            total += test
                .iter()
                .map(|&i| {
                    let e = residual[i] - fit.predict_unchecked(&data.points()[i]);
                    e * e
                })
                .sum::<f64>();
        }
        Ok(total)
    });

    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    for (&psi, score) in psi_grid.iter().zip(scores) {
        match score {
            Ok(s) if s.is_finite() => {
                best = match best {
                    Some((bp, bs)) if !(s < bs || (s == bs && psi > bp)) => Some((bp, bs)),
                    _ => Some((psi, s)),
                }
            }
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some((psi, _)), _) => Ok(psi),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::AllDegenerate),
    }
}

/// Monte Carlo PMSE over `points` against precomputed truths.
pub fn pmse_on(predictor: impl Fn(&[f64]) -> f64, points: &[Vec<f64>], truth: &[f64]) -> f64 {
    let sq: Vec<f64> = points
        .iter()
        .zip(truth)
        .map(|(x, t)| {
            let e = predictor(x) - t;
            e * e
        })
        .collect();
    par::pairwise_sum(&sq) / points.len() as f64
}

/// Mean of `[predictor(x) - ζ(x)]^2` over `mc_points` uniform draws.
pub fn pmse(
    predictor: impl Fn(&[f64]) -> f64,
    system: &NamedSystem,
    mc_points: usize,
    stream: &mut RngStream,
) -> Result<f64> {
    if !system.has_truth() {
        return Err(Error::NoTruthAvailable(system.id().to_string()));
    }
    if mc_points == 0 {
        return Err(Error::InvalidInput("mc_points must be positive".into()));
    }
    let points: Vec<Vec<f64>> = (0..mc_points).map(|_| stream.uniform(system.dim())).collect();
    let truth: Vec<f64> = points.iter().map(|x| system.zeta_unchecked(x)).collect();
    Ok(pmse_on(predictor, &points, &truth))
}

/// A fitted predictor `x ↦ η(x, θ) + δ̂(x)` with either part optional.
#[derive(Clone)]
pub struct Predictor {
    model: Option<(Arc<dyn ComputerModel>, Vec<f64>)>,
    discrepancy: Option<DiscrepancyFit>,
    /// ψ used for the kernel part, if any.
    pub psi: Option<f64>,
}

impl fmt::Debug for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Predictor")
            .field("theta", &self.theta())
            .field("psi", &self.psi)
            .field("lambda", &self.discrepancy.as_ref().map(|d| d.lambda()))
            .finish()
    }
}

impl Predictor {
    pub fn theta(&self) -> Option<&[f64]> {
        self.model.as_ref().map(|(_, t)| t.as_slice())
    }

    pub fn discrepancy(&self) -> Option<&DiscrepancyFit> {
        self.discrepancy.as_ref()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let base = self.model.as_ref().map_or(0.0, |(m, t)| m.eval(x, t));
        base + self.discrepancy.as_ref().map_or(0.0, |d| d.predict_unchecked(x))
    }
}

/// Predictors plus the prediction-oriented calibrator's objective trace.
#[derive(Debug, Clone)]
pub struct PredictorSet {
    pub predictors: BTreeMap<PredictorMethod, Predictor>,
    pub optpred_trace: Option<Vec<f64>>,
}

const TAG_DATA: u64 = 11;
const TAG_TEST: u64 = 12;
const TAG_CV_NP: u64 = 13;
const TAG_CV_CAL: u64 = 14;
const TAG_L2: u64 = 15;
const TAG_LS: u64 = 16;
const TAG_OPT: u64 = 17;

fn choose_psi(
    settings: &PredictorSettings,
    data: &Dataset,
    eta_at_x: Option<&[f64]>,
    stream: &RngStream,
) -> Result<f64> {
    match settings.psi_policy {
        PsiPolicy::Fixed(psi) => Ok(psi),
        PsiPolicy::Cv5 => cv5_select_psi(
            data,
            KernelFamily::Matern32,
            &settings.psi_grid,
            eta_at_x,
            &settings.calibration.lambda_grid,
            stream,
        ),
    }
}

/// Fits the requested predictors on one dataset.
///
/// ψ is chosen separately for the nonparametric fit of `Y` (used by NP and as
/// the L2 target) and for the discrepancy `Y - η(X, θ̂_ls)` (used by LSCal and
/// OptCal).
pub fn build_predictors(
    data: &Dataset,
    model: Arc<dyn ComputerModel>,
    settings: &PredictorSettings,
    stream: &RngStream,
) -> Result<PredictorSet> {
    if settings.methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }
    let wants = |m| settings.methods.contains(&m);
    let opts = &settings.calibration;
    let mut predictors = BTreeMap::new();
    let mut optpred_trace = None;

    if wants(PredictorMethod::Np) || wants(PredictorMethod::NoBiasCorr) {
        let psi = choose_psi(settings, data, None, &stream.derive(TAG_CV_NP))?;
        let kernel = KernelSpec::matern32(psi, data.dim())?;
        let system = RidgeSystem::new(data.points(), kernel)?;
        let lambda = system.select_lambda(data.y(), &opts.lambda_grid)?;
        let zeta_hat = system.fit(data.y(), lambda)?;
        if wants(PredictorMethod::NoBiasCorr) {
            let l2 = calibrate_l2_against(&zeta_hat, data.dim(), model.as_ref(), opts, &stream.derive(TAG_L2))?;
            predictors.insert(
                PredictorMethod::NoBiasCorr,
                Predictor {
                    model: Some((model.clone(), l2.theta_hat)),
                    discrepancy: None,
                    psi: None,
                },
            );
        }
        if wants(PredictorMethod::Np) {
            predictors.insert(
                PredictorMethod::Np,
                Predictor {
                    model: None,
                    discrepancy: Some(zeta_hat),
                    psi: Some(psi),
                },
            );
        }
    }

    if wants(PredictorMethod::LsCal) || wants(PredictorMethod::OptCal) {
        let ls = calibrate_ls(data, model.as_ref(), opts, &stream.derive(TAG_LS))?;
        let eta = model.eval_design(data.points(), &ls.theta_hat);
        let psi = choose_psi(settings, data, Some(&eta), &stream.derive(TAG_CV_CAL))?;
        let kernel = KernelSpec::matern32(psi, data.dim())?;
        if wants(PredictorMethod::LsCal) {
            let fit = fit_discrepancy_gcv(data, model.as_ref(), kernel, &ls.theta_hat, &opts.lambda_grid)?;
            predictors.insert(
                PredictorMethod::LsCal,
                Predictor {
                    model: Some((model.clone(), ls.theta_hat.clone())),
                    discrepancy: Some(fit),
                    psi: Some(psi),
                },
            );
        }
        if wants(PredictorMethod::OptCal) {
            let opt = calibrate_optpred_from(
                data,
                model.as_ref(),
                kernel,
                settings.optpred_mode,
                opts,
                &stream.derive(TAG_OPT),
                &ls.theta_hat,
                None,
            )?;
            optpred_trace = Some(opt.objective_trace.clone());
            predictors.insert(
                PredictorMethod::OptCal,
                Predictor {
                    model: Some((model.clone(), opt.theta_hat)),
                    discrepancy: opt.discrepancy,
                    psi: Some(psi),
                },
            );
        }
    }

    Ok(PredictorSet {
        predictors,
        optpred_trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmseRow {
    pub method: PredictorMethod,
    pub sigma2: f64,
    pub mean_pmse: f64,
    pub se_pmse: f64,
    pub replicates: usize,
}

/// Outcome of one (σ², replicate) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub sigma2: f64,
    pub replicate: usize,
    pub pmse: BTreeMap<PredictorMethod, f64>,
    /// Kernel scale behind each kernel-based predictor.
    pub psi: BTreeMap<PredictorMethod, f64>,
    pub optpred_trace: Option<Vec<f64>>,
    pub optpred_theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct PmseReport {
    /// Sorted by method label, then σ².
    pub rows: Vec<PmseRow>,
    /// Every cell, ordered by σ² index then replicate.
    pub outcomes: Vec<ReplicateOutcome>,
}

impl PmseReport {
    pub fn row(&self, method: PredictorMethod, sigma2: f64) -> Option<&PmseRow> {
        self.rows.iter().find(|r| r.method == method && r.sigma2 == sigma2)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,sigma2,mean_pmse,se_pmse,replicates\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.method.label(),
                fmt_real(r.sigma2),
                fmt_real(r.mean_pmse),
                fmt_real(r.se_pmse),
                r.replicates
            );
        }
        out
    }
}

/// Formats with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, v)
    } else {
        format!("{:.16e}", v)
    }
}

/// Runs one (σ², replicate) cell.
pub fn run_replicate(
    config: &ExperimentConfig,
    sigma_index: usize,
    replicate: usize,
) -> Result<ReplicateOutcome> {
    let system = NamedSystem::new(config.system);
    let sigma2 = config.sigma2[sigma_index];
    let base = RngStream::new(config.seed, replicate as u64).derive(sigma_index as u64);
    let data = generate_dataset(&system, config.n, sigma2.sqrt(), &mut base.derive(TAG_DATA))?;
    let model: Arc<dyn ComputerModel> = system.model().clone();
    let set = build_predictors(&data, model, &config.predictors, &base)?;

    let mut test_stream = base.derive(TAG_TEST);
    let points: Vec<Vec<f64>> = (0..config.mc_test_points)
        .map(|_| test_stream.uniform(system.dim()))
        .collect();
    let truth: Vec<f64> = points.iter().map(|x| system.zeta_unchecked(x)).collect();
    let pmse = set
        .predictors
        .iter()
        .map(|(&m, p)| (m, pmse_on(|x| p.predict(x), &points, &truth)))
        .collect();
    Ok(ReplicateOutcome {
        sigma2,
        replicate,
        pmse,
        psi: set.predictors.iter().filter_map(|(&m, p)| p.psi.map(|v| (m, v))).collect(),
        optpred_trace: set.optpred_trace,
        optpred_theta: set
            .predictors
            .get(&PredictorMethod::OptCal)
            .and_then(|p| p.theta().map(<[f64]>::to_vec)),
    })
}

/// Runs every replicate of every σ², aggregates mean and SE per
/// (method, σ²), and writes the CSV when `config.output` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<PmseReport> {
    config.validate()?;
    let cells: Vec<(usize, usize)> = (0..config.sigma2.len())
        .flat_map(|j| (0..config.replicates).map(move |r| (j, r)))
        .collect();
    let results = par::map_slice(&cells, |&(j, r)| run_replicate(config, j, r));
    let mut outcomes = Vec::with_capacity(results.len());
    for ((_, r), res) in cells.iter().zip(results) {
        outcomes.push(res.map_err(|e| Error::Replicate {
            replicate: *r,
            source: Box::new(e),
        })?);
    }

    let mut rows = Vec::new();
    for &method in &config.predictors.methods {
        for (j, &sigma2) in config.sigma2.iter().enumerate() {
            let values: Vec<f64> = outcomes[j * config.replicates..(j + 1) * config.replicates]
                .iter()
                .map(|o| o.pmse[&method])
                .collect();
            let (mean, sd) = mean_and_sd(&values);
            rows.push(PmseRow {
                method,
                sigma2,
                mean_pmse: mean,
                se_pmse: sd,
                replicates: values.len(),
            });
        }
    }
    rows.sort_by(|a, b| {
        a.method
            .label()
            .cmp(b.method.label())
            .then(a.sigma2.total_cmp(&b.sigma2))
    });
    let report = PmseReport { rows, outcomes };
    if let Some(path) = &config.output {
        std::fs::write(path, report.to_csv())?;
    }
    Ok(report)
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = par::pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, (par::pairwise_sum(&dev) / (n - 1.0)).sqrt())
}
