//! Prediction-oriented calibration of computer models with kernel ridge
//! discrepancy correction.
//!
//! Physical data `y_i = ζ(x_i) + ε_i` are combined with a cheap computer model
//! `η(x, θ)`. Calibrators choose `θ`, a kernel ridge fit in a Matérn-3/2 RKHS
//! corrects the discrepancy, and the experiment harness compares predictors by
//! Monte Carlo PMSE over seeded replicates.

pub mod bayes;
pub mod bounds;
pub mod calibration;
pub mod error;
pub mod experiments;
pub mod fitfile;
pub mod kernels;
pub mod linalg;
pub mod models;
pub mod optimize;
pub mod par;
pub mod profile;
pub mod regression;
pub mod rng;

pub use bounds::ParamBox;
pub use calibration::{
    calibrate_l2, calibrate_ls, calibrate_optpred, CalibrationOptions, CalibrationResult,
    ComputerModel, FnModel, Method, OptPredMode,
};
pub use error::{Error, Result};
pub use kernels::KernelSpec;
pub use models::{NamedSystem, SystemId};
pub use regression::{Dataset, DiscrepancyFit};
pub use rng::RngStream;
