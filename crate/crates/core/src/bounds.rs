use crate::error::{Error, Result};

/// Axis-aligned box `[lower_j, upper_j]` for a parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidInput(format!(
                "box bounds must be nonempty and of equal length ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!(
                    "degenerate box side {j}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The box `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    /// Folds a coordinate back into the box by mirror reflection at the faces.
    pub fn reflect(&self, point: &mut [f64]) {
        for (j, v) in point.iter_mut().enumerate() {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            let w = hi - lo;
            if *v >= lo && *v <= hi {
                continue;
            }
            if !v.is_finite() {
                *v = lo + 0.5 * w;
                continue;
            }
            // period-2w sawtooth
            let mut t = (*v - lo).rem_euclid(2.0 * w);
            if t > w {
                t = 2.0 * w - t;
            }
            *v = (lo + t).clamp(lo, hi);
        }
    }
}
