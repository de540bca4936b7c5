//! Dense symmetric positive-definite algebra and a small-matrix exponential.
//!
//! Every linear solve in the crate goes through [`CholFactor`]; no explicit
//! inverses are formed.

use crate::error::{Error, Result};

/// Symmetric matrix stored as a full row-major square.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds the matrix from `f(i, j)` evaluated on the lower triangle and mirrored.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    /// Builds from a row-major square, symmetrizing as `(A + A^T) / 2`.
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Ok(Self::from_fn(n, |i, j| 0.5 * (entries[i * n + j] + entries[j * n + i])))
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Adds `shift` to every diagonal entry.
    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += shift;
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, v.len())?;
        Ok((0..self.n).map(|i| dot(self.row(i), v)).collect())
    }

    /// `v^T A v`.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        Ok(dot(v, &self.mul_vec(v)?))
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    n: usize,
    l: Vec<f64>,
}

/// Factors `A`.
pub fn cholesky(a: &SymMatrix) -> Result<CholFactor> {
    cholesky_shifted(a, 0.0)
}

/// Factors `A + shift * I` without copying `A`.
pub fn cholesky_shifted(a: &SymMatrix, shift: f64) -> Result<CholFactor> {
    let n = a.n;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.data[i * n + j];
            if i == j {
                s += shift;
            }
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            s -= dot(ri, rj);
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(CholFactor { n, l })
}

impl CholFactor {
    pub fn order(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)` of `L` (zero above the diagonal).
    pub fn l(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.l[i * self.n + j]
        }
    }

    pub fn min_diagonal(&self) -> f64 {
        (0..self.n)
            .map(|i| self.l[i * self.n + i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `L y = b` in place.
    fn forward(&self, y: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
    }

    /// Solves `L^T x = y` in place.
    fn backward(&self, x: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }

    /// `A^{-1} b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        Ok(x)
    }

    /// `b^T A^{-1} b`, computed as `||L^{-1} b||^2`.
    pub fn inv_quad_form(&self, b: &[f64]) -> Result<f64> {
        check_len(self.n, b.len())?;
        let mut y = b.to_vec();
        self.forward(&mut y);
        Ok(dot(&y, &y))
    }

    /// `tr(A^{-1}) = ||L^{-1}||_F^2`, one triangular solve per unit vector.
    pub fn inverse_trace(&self) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        let mut col = vec![0.0; n];
        for k in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[k] = 1.0;
            // L^{-1} e_k is zero above row k
            for i in k..n {
                let s = dot(&self.l[i * n + k..i * n + i], &col[k..i]);
                col[i] = (col[i] - s) / self.l[i * n + i];
            }
            total += dot(&col[k..], &col[k..]);
        }
        total
    }

    /// Reassembles `L L^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.n;
        SymMatrix::from_fn(n, |i, j| {
            let m = i.min(j);
            dot(&self.l[i * n..i * n + m + 1], &self.l[j * n..j * n + m + 1])
        })
    }
}

/// `A^{-1} b` through a precomputed factor.
pub fn solve_spd(factor: &CholFactor, b: &[f64]) -> Result<Vec<f64>> {
    factor.solve(b)
}

/// `tr(Σ (Σ + nλ I)^{-1})`, the trace of the ridge influence matrix.
///
/// Uses `tr(Σ M^{-1}) = n - nλ tr(M^{-1})` with `M = Σ + nλ I`.
pub fn trace_of_influence(sigma: &SymMatrix, n_lambda: f64) -> Result<f64> {
    let factor = cholesky_shifted(sigma, n_lambda)?;
    Ok(trace_of_influence_factored(&factor, n_lambda))
}

/// Same as [`trace_of_influence`] given the factor of `Σ + nλ I`.
pub fn trace_of_influence_factored(factor: &CholFactor, n_lambda: f64) -> f64 {
    let n = factor.order() as f64;
    (n - n_lambda * factor.inverse_trace()).max(0.0)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// General dense square matrix, row-major. Used for small generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            check_len(n, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    fn solve_matrix(&self, rhs: &Matrix) -> Matrix {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .unwrap_or(col);
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                    b.swap(col * n + j, pivot * n + j);
                }
            }
            let d = a[col * n + col];
            for i in col + 1..n {
                let f = a[i * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[i * n + j] -= f * a[col * n + j];
                }
                for j in 0..n {
                    b[i * n + j] -= f * b[col * n + j];
                }
            }
        }
        for col in 0..n {
            for i in (0..n).rev() {
                let mut s = b[i * n + col];
                for k in i + 1..n {
                    s -= a[i * n + k] * b[k * n + col];
                }
                b[i * n + col] = s / a[i * n + i];
            }
        }
        Matrix { n, data: b }
    }
}

const PADE_ORDER: usize = 6;
const SCALING_THRESHOLD: f64 = 0.5;

/// `exp(A)` by scaling and squaring with the diagonal (6,6) Padé approximant.
///
/// Intended for the small generators of Markov-chain models (order up to 8).
pub fn matrix_exponential(a: &Matrix) -> Matrix {
    let n = a.order();
    let norm = a.norm1();
    let squarings = if norm > SCALING_THRESHOLD {
        (norm / SCALING_THRESHOLD).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let x = a.scale(0.5f64.powi(squarings as i32));

    let mut coeffs = [0.0; PADE_ORDER + 1];
    coeffs[0] = 1.0;
    let q = PADE_ORDER as f64;
    for k in 1..=PADE_ORDER {
        let kf = k as f64;
        coeffs[k] = coeffs[k - 1] * (q - kf + 1.0) / (kf * (2.0 * q - kf + 1.0));
    }

    let mut numer = Matrix::identity(n);
    let mut denom = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    for (k, &c) in coeffs.iter().enumerate().skip(1) {
        power = power.mul(&x);
        let term = power.scale(c);
        numer = numer.add(&term);
        denom = if k % 2 == 0 {
            denom.add(&term)
        } else {
            denom.add(&term.scale(-1.0))
        };
    }
    let mut result = denom.solve_matrix(&numer);
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}
