//! The benchmark systems: three synthetic physical systems with imperfect
//! computer models, and a Markov-chain ion-channel model for user data.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::bounds::ParamBox;
use crate::calibration::ComputerModel;
use crate::error::{Error, Result};
use crate::linalg::{matrix_exponential, Matrix};
use crate::regression::Dataset;
use crate::rng::RngStream;

pub fn ex1_zeta(x: f64) -> f64 {
    (PI * x / 5.0).exp() * (2.0 * PI * x).sin()
}

/// Amplitude-and-frequency perturbation of the first system.
pub fn ex1_discrepancy(x: f64, theta: f64) -> f64 {
    let w = 2.0 * PI * theta * x;
    (theta * theta - theta + 1.0).sqrt() * (w.sin() + w.cos())
}

pub fn ex1_eta(x: f64, theta: f64) -> f64 {
    ex1_zeta(x) - ex1_discrepancy(x, theta)
}

pub fn ex2_zeta(x1: f64, x2: f64) -> f64 {
    ex2_eta(x1, x2, 0.2, 0.4) + (-x1).exp() * (x1 + 0.5) * (x2 * x2 + x2 + 1.0)
}

pub fn ex2_eta(x1: f64, x2: f64, theta1: f64, theta2: f64) -> f64 {
    2.0 / 3.0 * (x1 + theta1).exp() - x2 * theta2.sin() + theta2
}

/// Height of a ball falling with air resistance.
pub fn ex3_zeta(x: f64) -> f64 {
    let t = (0.02f64.sqrt().atanh() + 2f64.sqrt() * x).tanh();
    8.0 + 2.5 * (50.0 / 49.0 - 50.0 / 49.0 * t * t).ln()
}

/// Drag-free kinematics.
pub fn ex3_eta(x: f64, v0: f64, g: f64) -> f64 {
    8.0 + v0 * x - g * x * x / 2.0
}

/// The 4-state generator `A(θ)`.
pub fn ion_generator(theta: &[f64]) -> Matrix {
    let (t1, t2, t3) = (theta[0], theta[1], theta[2]);
    Matrix::from_rows(&[
        &[-t2 - t3, t1, 0.0, 0.0],
        &[t2, -t1 - t2, t1, 0.0],
        &[0.0, t2, -t1 - t2, t1],
        &[0.0, 0.0, t2, -t1],
    ])
    .expect("4x4 generator")
}

/// `e_1^T exp(exp(x) A(θ)) e_4`, with `x` the log time.
pub fn ion_eta(x: f64, theta: &[f64]) -> f64 {
    matrix_exponential(&ion_generator(theta).scale(x.exp())).get(0, 3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemId {
    Ex1,
    Ex2,
    Ex3,
    Ion,
}

impl SystemId {
    pub fn name(self) -> &'static str {
        match self {
            SystemId::Ex1 => "ex1",
            SystemId::Ex2 => "ex2",
            SystemId::Ex3 => "ex3",
            SystemId::Ion => "ion",
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ex1" => Ok(SystemId::Ex1),
            "ex2" => Ok(SystemId::Ex2),
            "ex3" => Ok(SystemId::Ex3),
            "ion" => Ok(SystemId::Ion),
            other => Err(Error::InvalidInput(format!("unknown system `{other}`"))),
        }
    }
}

/// Computer model of one of the named systems, on inputs in `[0,1]^d`.
#[derive(Debug, Clone)]
pub struct NamedModel {
    id: SystemId,
    theta_box: ParamBox,
    /// Affine map from `[0,1]` onto the ion model's log-time axis.
    input_range: (f64, f64),
}

impl NamedModel {
    pub fn id(&self) -> SystemId {
        self.id
    }

    pub fn input_range(&self) -> (f64, f64) {
        self.input_range
    }
}

impl ComputerModel for NamedModel {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        match self.id {
            SystemId::Ex1 => ex1_eta(x[0], theta[0]),
            SystemId::Ex2 => ex2_eta(x[0], x[1], theta[0], theta[1]),
            SystemId::Ex3 => ex3_eta(x[0], theta[0], theta[1]),
            SystemId::Ion => {
                let (lo, hi) = self.input_range;
                ion_eta(lo + x[0] * (hi - lo), theta)
            }
        }
    }

    fn theta_box(&self) -> &ParamBox {
        &self.theta_box
    }

    fn input_dim(&self) -> usize {
        match self.id {
            SystemId::Ex2 => 2,
            _ => 1,
        }
    }
}

/// A benchmark: truth (when known), computer model and reference values.
#[derive(Debug, Clone)]
pub struct NamedSystem {
    model: Arc<NamedModel>,
    reference_theta: Vec<(&'static str, Vec<f64>)>,
}

impl NamedSystem {
    pub fn new(id: SystemId) -> Self {
        let (theta_box, reference_theta) = match id {
            SystemId::Ex1 => (
                ParamBox::cube(1, -1.0, 1.0),
                vec![("L2", vec![-0.1780]), ("opt-pred", vec![0.3740])],
            ),
            SystemId::Ex2 => (ParamBox::cube(2, 0.0, 1.0), vec![]),
            SystemId::Ex3 => (ParamBox::new(vec![-5.0, 0.0], vec![5.0, 20.0]), vec![]),
            SystemId::Ion => (ParamBox::cube(3, 1e-4, 10.0), vec![]),
        };
        let model = NamedModel {
            id,
            theta_box: theta_box.expect("static box"),
            input_range: (0.0, 1.0),
        };
        Self {
            model: Arc::new(model),
            reference_theta,
        }
    }

    /// Ion-channel system whose `[0,1]` inputs map onto `[lo, hi]` log time.
    pub fn ion_with_input_range(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!("bad input range [{lo}, {hi}]")));
        }
        let mut sys = Self::new(SystemId::Ion);
        Arc::make_mut(&mut sys.model).input_range = (lo, hi);
        Ok(sys)
    }

    pub fn id(&self) -> SystemId {
        self.model.id
    }

    pub fn dim(&self) -> usize {
        self.model.input_dim()
    }

    pub fn model(&self) -> &Arc<NamedModel> {
        &self.model
    }

    pub fn theta_box(&self) -> &ParamBox {
        self.model.theta_box()
    }

    pub fn reference_theta(&self) -> &[(&'static str, Vec<f64>)] {
        &self.reference_theta
    }

    pub fn has_truth(&self) -> bool {
        self.model.id != SystemId::Ion
    }

    /// Unchecked truth; panics for the ion system.
    pub fn zeta_unchecked(&self, x: &[f64]) -> f64 {
        match self.model.id {
            SystemId::Ex1 => ex1_zeta(x[0]),
            SystemId::Ex2 => ex2_zeta(x[0], x[1]),
            SystemId::Ex3 => ex3_zeta(x[0]),
            SystemId::Ion => panic!("ion system has no known truth"),
        }
    }

    pub fn zeta(&self, x: &[f64]) -> Result<f64> {
        if !self.has_truth() {
            return Err(Error::NoTruthAvailable(self.id().to_string()));
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.zeta_unchecked(x))
    }

    pub fn eta(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.model.eval(x, theta)
    }
}

/// `n` observations with uniform design and `N(0, σ²)` noise.
pub fn generate_dataset(
    system: &NamedSystem,
    n: usize,
    sigma: f64,
    stream: &mut RngStream,
) -> Result<Dataset> {
    if !system.has_truth() {
        return Err(Error::NoTruthAvailable(system.id().to_string()));
    }
    let d = system.dim();
    let points: Vec<Vec<f64>> = (0..n).map(|_| stream.uniform(d)).collect();
    let y = points
        .iter()
        .map(|x| system.zeta_unchecked(x) + stream.normal(sigma))
        .collect();
    Dataset::new(points, y)
}

/// Raw CSV table: header `x1,...,xd,y` (the last column is the response).
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv_table(path: &Path) -> Result<CsvTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                line: i + 2,
                message: format!("expected {} fields, got {}", header.len(), record.len()),
            });
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 2,
                    message: format!("`{f}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

impl CsvTable {
    /// Splits into design points and responses (last column).
    pub fn into_dataset(self) -> Result<Dataset> {
        if self.header.len() < 2 {
            return Err(Error::InvalidInput(
                "dataset CSV needs at least one input column and a response".into(),
            ));
        }
        let mut points = Vec::with_capacity(self.rows.len());
        let mut y = Vec::with_capacity(self.rows.len());
        for mut row in self.rows {
            y.push(row.pop().expect("nonempty row"));
            points.push(row);
        }
        Dataset::new(points, y)
    }

    /// Min-max rescales the first column into `[0,1]`, returning the original range.
    pub fn rescale_first_column(&mut self) -> Result<(f64, f64)> {
        let (lo, hi) = self
            .rows
            .iter()
            .map(|r| r[0])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !(lo < hi) {
            return Err(Error::InvalidInput("input column is constant".into()));
        }
        for r in &mut self.rows {
            r[0] = ((r[0] - lo) / (hi - lo)).clamp(0.0, 1.0);
        }
        Ok((lo, hi))
    }
}

/// Loads a dataset CSV with header `x1,...,xd,y`; inputs must lie in `[0,1]`.
pub fn load_dataset_csv(path: &Path) -> Result<Dataset> {
    read_csv_table(path)?.into_dataset()
}
