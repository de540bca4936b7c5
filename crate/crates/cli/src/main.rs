use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use optcal::calibration::{
    calibrate_l2_against, calibrate_ls, calibrate_optpred_from, fit_discrepancy_gcv,
    CalibrationOptions, ComputerModel, OptPredMode,
};
use optcal::experiments::{cv5_select_psi, default_psi_grid, fmt_real, run_experiment, ExperimentConfig};
use optcal::fitfile::SavedFit;
use optcal::kernels::{KernelFamily, KernelSpec};
use optcal::models::{read_csv_table, NamedSystem, SystemId};
use optcal::par;
use optcal::profile::{norm_profile, ProfileNorm, PROFILE_PSI, PROFILE_STEP};
use optcal::regression::RidgeSystem;
use optcal::rng::{RngStream, DEFAULT_SEED};
use optcal::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "optcal", version, about = "Prediction-oriented calibration of computer models")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a replicated PMSE experiment from a key=value config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Calibrate a named model against a dataset CSV (`x1..xd,y`).
    Calibrate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: SystemId,
        #[arg(long, value_enum)]
        method: CalMethod,
        #[arg(long, value_enum, default_value_t = Mode::OneStep)]
        mode: Mode,
        /// Kernel scale; five-fold CV when absent.
        #[arg(long)]
        psi: Option<f64>,
        #[arg(long, default_value_t = optcal::optimize::DEFAULT_STARTS)]
        starts: usize,
    },
    /// Evaluate a saved fit at the points of a CSV file.
    Predict {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        points: PathBuf,
    },
    /// Squared-norm profile of the discrepancy over θ.
    Profile {
        #[arg(long)]
        model: SystemId,
        #[arg(long)]
        norm: ProfileNorm,
        #[arg(long, default_value_t = PROFILE_PSI)]
        psi: f64,
        #[arg(long, default_value_t = PROFILE_STEP)]
        step: f64,
    },
    /// Gap between the Bayesian posterior mean and its flat-prior limit.
    Proposition {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1e2, 1e4, 1e6, 1e8])]
        alpha_grid: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        p: usize,
        #[arg(long, default_value_t = 50)]
        test_points: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CalMethod {
    Ls,
    L2,
    Optpred,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    OneStep,
    Full,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn experiment(cli: &Cli, config: &Path) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.out.is_some() {
        cfg.output = cli.out.clone();
    }
    let report = run_experiment(&cfg)?;
    if cfg.output.is_none() {
        print!("{}", report.to_csv());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn calibrate(
    cli: &Cli,
    data_path: &Path,
    id: SystemId,
    method: CalMethod,
    mode: Mode,
    psi: Option<f64>,
    starts: usize,
) -> Result<()> {
    let mut table = read_csv_table(data_path)?;
    let system = if id == SystemId::Ion {
        let (lo, hi) = table.rescale_first_column()?;
        NamedSystem::ion_with_input_range(lo, hi)?
    } else {
        NamedSystem::new(id)
    };
    let data = table.into_dataset()?;
    let model: Arc<dyn ComputerModel> = system.model().clone();
    let options = CalibrationOptions {
        starts,
        ..CalibrationOptions::default()
    };
    let stream = RngStream::new(cli.seed.unwrap_or(DEFAULT_SEED), 0);
    let choose_psi = |eta: Option<&[f64]>, tag: u64| -> Result<f64> {
        match psi {
            Some(p) => Ok(p),
            None => cv5_select_psi(
                &data,
                KernelFamily::Matern32,
                &default_psi_grid(data.dim()),
                eta,
                &options.lambda_grid,
                &stream.derive(tag),
            ),
        }
    };

    let (theta, discrepancy, lambda) = match method {
        CalMethod::L2 => {
            let kernel = KernelSpec::matern32(choose_psi(None, 1)?, data.dim())?;
            let ridge = RidgeSystem::new(data.points(), kernel)?;
            let lambda = ridge.select_lambda(data.y(), &options.lambda_grid)?;
            let zeta_hat = ridge.fit(data.y(), lambda)?;
            let r = calibrate_l2_against(&zeta_hat, data.dim(), model.as_ref(), &options, &stream.derive(2))?;
            (r.theta_hat, None, lambda)
        }
        CalMethod::Ls | CalMethod::Optpred => {
            let ls = calibrate_ls(&data, model.as_ref(), &options, &stream.derive(3))?;
            let eta = model.eval_design(data.points(), &ls.theta_hat);
            let kernel = KernelSpec::matern32(choose_psi(Some(&eta), 4)?, data.dim())?;
            if let CalMethod::Ls = method {
                let fit = fit_discrepancy_gcv(&data, model.as_ref(), kernel, &ls.theta_hat, &options.lambda_grid)?;
                let lambda = fit.lambda();
                (ls.theta_hat, Some(fit), lambda)
            } else {
                let mode = match mode {
                    Mode::OneStep => OptPredMode::OneStep,
                    Mode::Full => OptPredMode::Full,
                };
                let r = calibrate_optpred_from(
                    &data,
                    model.as_ref(),
                    kernel,
                    mode,
                    &options,
                    &stream.derive(5),
                    &ls.theta_hat,
                    None,
                )?;
                let lambda = r.lambda_used.unwrap_or(f64::NAN);
                (r.theta_hat, r.discrepancy, lambda)
            }
        }
    };

    let theta_text: Vec<String> = theta.iter().map(|t| fmt_real(*t)).collect();
    println!("theta={}", theta_text.join(","));
    println!("lambda={}", fmt_real(lambda));
    if let Some(d) = &discrepancy {
        println!("psi={}", fmt_real(d.kernel().psi()));
    }
    if let Some(path) = &cli.out {
        std::fs::write(path, SavedFit::new(system, theta, discrepancy).to_text())?;
    }
    Ok(())
}

fn predict(cli: &Cli, fit: &Path, points: &Path) -> Result<()> {
    let saved = SavedFit::parse(&std::fs::read_to_string(fit)?)?;
    let table = read_csv_table(points)?;
    let d = saved.system.dim();
    if table.header.len() < d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: table.header.len(),
        });
    }
    let mut out = table.header[..d].join(",");
    out.push_str(",prediction\n");
    for row in &table.rows {
        let x = &row[..d];
        let coords: Vec<String> = x.iter().map(|v| fmt_real(*v)).collect();
        let _ = writeln!(out, "{},{}", coords.join(","), fmt_real(saved.predict(x)?));
    }
    emit(cli.out.as_deref(), &out)
}

fn proposition(cli: &Cli, n: usize, alphas: &[f64], p: usize, test_points: usize) -> Result<()> {
    let mut stream = RngStream::new(cli.seed.unwrap_or(DEFAULT_SEED), 0);
    let inst = optcal::bayes::PropositionInstance::random(n, p, test_points, &mut stream)?;
    let dev = inst.relative_deviations(alphas)?;
    let mut out = String::from("alpha,relative_deviation\n");
    for (a, d) in alphas.iter().zip(dev) {
        let _ = writeln!(out, "{},{}", fmt_real(*a), fmt_real(d));
    }
    emit(cli.out.as_deref(), &out)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Experiment { config } => experiment(cli, config),
        Command::Calibrate {
            data,
            model,
            method,
            mode,
            psi,
            starts,
        } => calibrate(cli, data, *model, *method, *mode, *psi, *starts),
        Command::Predict { fit, points } => predict(cli, fit, points),
        Command::Profile {
            model,
            norm,
            psi,
            step,
        } => {
            let profile = norm_profile(&NamedSystem::new(*model), *norm, *psi, *step)?;
            emit(cli.out.as_deref(), &profile.to_csv())
        }
        Command::Proposition {
            n,
            alpha_grid,
            p,
            test_points,
        } => proposition(cli, *n, alpha_grid, *p, *test_points),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match par::with_threads(cli.threads, || run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
