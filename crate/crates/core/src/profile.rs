//! Norm profiles `θ ↦ ‖ζ - η(·, θ)‖²` for one-parameter systems.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::fmt_real;
use crate::kernels::{GridNorm, KernelSpec};
use crate::models::NamedSystem;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileNorm {
    L2,
    Rkhs,
}

impl fmt::Display for ProfileNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileNorm::L2 => "l2",
            ProfileNorm::Rkhs => "rkhs",
        })
    }
}

impl FromStr for ProfileNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(ProfileNorm::L2),
            "rkhs" => Ok(ProfileNorm::Rkhs),
            _ => Err(Error::InvalidInput(format!("unknown norm `{s}`"))),
        }
    }
}

pub const PROFILE_STEP: f64 = 1e-3;
pub const RKHS_GRID: usize = 200;
pub const L2_QUADRATURE: usize = 4096;
/// Default kernel scale for the RKHS profile: the modal five-fold CV choice
/// on the first example at `n = 50`, `σ² = 0.1`.
pub const PROFILE_PSI: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub theta: Vec<f64>,
    pub norm_sq: Vec<f64>,
}

impl Profile {
    pub fn argmin(&self) -> f64 {
        let mut best = 0;
        for (i, v) in self.norm_sq.iter().enumerate() {
            if *v < self.norm_sq[best] {
                best = i;
            }
        }
        self.theta[best]
    }

    /// Interior strict local minima, in increasing θ.
    pub fn local_minima(&self) -> Vec<f64> {
        let v = &self.norm_sq;
        (1..v.len().saturating_sub(1))
            .filter(|&i| v[i] < v[i - 1] && v[i] <= v[i + 1])
            .map(|i| self.theta[i])
            .collect()
    }

    pub fn value_at(&self, theta: f64) -> Option<f64> {
        let i = self
            .theta
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - theta).abs().total_cmp(&(b.1 - theta).abs()))?
            .0;
        Some(self.norm_sq[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,norm_sq\n");
        for (t, v) in self.theta.iter().zip(&self.norm_sq) {
            let _ = writeln!(out, "{},{}", fmt_real(*t), fmt_real(*v));
        }
        out
    }
}

/// Evaluates the squared-norm profile on `θ = lower, lower + step, …, upper`.
///
/// Only systems with a one-dimensional parameter and a known ζ qualify. The
/// RKHS norm is approximated on a uniform grid of `RKHS_GRID` points per axis
/// with kernel scale `psi`; the L2 norm by the midpoint rule on
/// `L2_QUADRATURE` cells.
pub fn norm_profile(system: &NamedSystem, norm: ProfileNorm, psi: f64, step: f64) -> Result<Profile> {
    if !system.has_truth() {
        return Err(Error::NoTruthAvailable(system.id().to_string()));
    }
    let bx = system.theta_box();
    if bx.dim() != 1 || system.dim() != 1 {
        return Err(Error::InvalidInput(format!(
            "profiles need a scalar input and parameter, `{}` has {} and {}",
            system.id(),
            system.dim(),
            bx.dim()
        )));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidInput("profile step must be positive".into()));
    }
    let (lo, hi) = (bx.lower()[0], bx.upper()[0]);
    let count = ((hi - lo) / step).round() as usize + 1;
    let inv = (1.0 / step).round();
    let on_lattice = (inv * step - 1.0).abs() < 1e-12 && ((lo * inv).round() - lo * inv).abs() < 1e-9;
    let theta: Vec<f64> = (0..count)
        .map(|i| {
            let t = if on_lattice {
                ((lo * inv).round() + i as f64) / inv
            } else {
                lo + i as f64 * step
            };
            t.min(hi)
        })
        .collect();

    let norm_sq = match norm {
        ProfileNorm::Rkhs => {
            let kernel = KernelSpec::matern32(psi, 1)?;
            let grid_norm = GridNorm::new(&kernel, RKHS_GRID)?;
            par::map_slice(&theta, |&t| {
                grid_norm.norm_sq(|x| system.zeta_unchecked(x) - system.eta(x, &[t]))
            })
            .into_iter()
            .collect::<Result<Vec<f64>>>()?
        }
        ProfileNorm::L2 => {
            let xs: Vec<Vec<f64>> = (0..L2_QUADRATURE)
                .map(|i| vec![(i as f64 + 0.5) / L2_QUADRATURE as f64])
                .collect();
            let zeta: Vec<f64> = xs.iter().map(|x| system.zeta_unchecked(x)).collect();
            par::map_slice(&theta, |&t| {
                let sq: Vec<f64> = xs
                    .iter()
                    .zip(&zeta)
                    .map(|(x, z)| (z - system.eta(x, &[t])).powi(2))
                    .collect();
                par::pairwise_sum(&sq) / L2_QUADRATURE as f64
            })
        }
    };
    Ok(Profile { theta, norm_sq })
}
