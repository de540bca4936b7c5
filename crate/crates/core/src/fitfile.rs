//! Plain-text persistence for a calibrated predictor.
//!
//! ```text
//! model=ex1
//! input_range=0,1
//! theta=0.3712
//! psi=0.2
//! lambda=0.00013
//! jitter=1e-8
//! node=c,x1,...,xd
//! ```
//! One `node` line per training point; the discrepancy keys are omitted when
//! the predictor has no kernel part.

use std::fmt::Write as _;

use crate::calibration::ComputerModel;
use crate::error::{Error, Result};
use crate::experiments::fmt_real;
use crate::kernels::KernelSpec;
use crate::models::{NamedSystem, SystemId};
use crate::regression::DiscrepancyFit;

#[derive(Debug, Clone)]
pub struct SavedFit {
    pub system: NamedSystem,
    pub theta: Vec<f64>,
    pub discrepancy: Option<DiscrepancyFit>,
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>().join(",")
}

impl SavedFit {
    pub fn new(system: NamedSystem, theta: Vec<f64>, discrepancy: Option<DiscrepancyFit>) -> Self {
        Self {
            system,
            theta,
            discrepancy,
        }
    }

    /// Prediction at a point given on the original input scale.
    pub fn predict(&self, raw_x: &[f64]) -> Result<f64> {
        if raw_x.len() != self.system.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.system.dim(),
                got: raw_x.len(),
            });
        }
        let (lo, hi) = self.system.model().input_range();
        let x: Vec<f64> = if self.system.id() == SystemId::Ion {
            vec![(raw_x[0] - lo) / (hi - lo)]
        } else {
            raw_x.to_vec()
        };
        let base = self.system.model().eval(&x, &self.theta);
        Ok(base + self.discrepancy.as_ref().map_or(0.0, |d| d.predict_unchecked(&x)))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let (lo, hi) = self.system.model().input_range();
        let _ = writeln!(out, "model={}", self.system.id());
        let _ = writeln!(out, "input_range={}", join(&[lo, hi]));
        let _ = writeln!(out, "theta={}", join(&self.theta));
        if let Some(d) = &self.discrepancy {
            let _ = writeln!(out, "psi={}", fmt_real(d.kernel().psi()));
            let _ = writeln!(out, "lambda={}", fmt_real(d.lambda()));
            let _ = writeln!(out, "jitter={}", fmt_real(d.jitter()));
            for (c, x) in d.coefficients().iter().zip(d.points()) {
                let _ = writeln!(out, "node={},{}", fmt_real(*c), join(x));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut model = None;
        let mut range = (0.0, 1.0);
        let mut theta = None;
        let (mut psi, mut lambda, mut jitter) = (None, None, 0.0);
        let mut coefficients = Vec::new();
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |message: String| Error::Parse { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected key=value, got `{line}`")))?;
            let nums = value
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| perr(format!("`{s}`: {e}"))))
                .collect::<Result<Vec<f64>>>();
            match key.trim() {
                "model" => model = Some(value.trim().parse::<SystemId>().map_err(|e| perr(e.to_string()))?),
                "input_range" => match nums?.as_slice() {
                    [lo, hi] => range = (*lo, *hi),
                    _ => return Err(perr("input_range needs two values".into())),
                },
                "theta" => theta = Some(nums?),
                "psi" => psi = Some(nums?[0]),
                "lambda" => lambda = Some(nums?[0]),
                "jitter" => jitter = nums?[0],
                "node" => {
                    let v = nums?;
                    if v.len() < 2 {
                        return Err(perr("node needs a coefficient and coordinates".into()));
                    }
                    coefficients.push(v[0]);
                    points.push(v[1..].to_vec());
                }
                other => return Err(perr(format!("unknown key `{other}`"))),
            }
        }
        let id = model.ok_or_else(|| Error::InvalidInput("fit file has no model".into()))?;
        let system = if id == SystemId::Ion {
            NamedSystem::ion_with_input_range(range.0, range.1)?
        } else {
            NamedSystem::new(id)
        };
        let theta = theta.ok_or_else(|| Error::InvalidInput("fit file has no theta".into()))?;
        if theta.len() != system.theta_box().dim() {
            return Err(Error::DimensionMismatch {
                expected: system.theta_box().dim(),
                got: theta.len(),
            });
        }
        let discrepancy = match (psi, lambda) {
            (Some(psi), Some(lambda)) => {
                if points.iter().any(|p| p.len() != system.dim()) {
                    return Err(Error::InvalidInput("node dimension does not match the model".into()));
                }
                let kernel = KernelSpec::matern32(psi, system.dim())?;
                let n = points.len();
                Some(DiscrepancyFit::from_parts(kernel, points, coefficients, lambda, vec![0.0; n], jitter)?)
            }
            (None, None) if points.is_empty() => None,
            _ => return Err(Error::InvalidInput("incomplete discrepancy in fit file".into())),
        };
        Ok(Self::new(system, theta, discrepancy))
    }
}
