//! Matérn reproducing kernels, Gram matrices and a grid approximation of the
//! RKHS norm.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_shifted, CholFactor, SymMatrix};

/// Jitter added to every Gram diagonal unless the caller asks otherwise.
pub const DEFAULT_JITTER: f64 = 1e-8;
/// Escalation stops once jitter would exceed this.
pub const MAX_JITTER: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// `(1 + r/ψ) exp(-r/ψ)`.
    Matern32,
}

impl KernelFamily {
    /// Sobolev smoothness order of the associated RKHS in one dimension.
    pub fn smoothness(self) -> f64 {
        match self {
            KernelFamily::Matern32 => 2.0,
        }
    }
}

/// A stationary kernel on `[0,1]^d` with length-scale `psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    psi: f64,
    dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, psi: f64, dim: usize) -> Result<Self> {
        if !(psi > 0.0 && psi.is_finite()) {
            return Err(Error::InvalidInput(format!("kernel scale must be positive, got {psi}")));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("kernel dimension must be at least 1".into()));
        }
        Ok(Self { family, psi, dim })
    }

    pub fn matern32(psi: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Matern32, psi, dim)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same family and dimension, different scale.
    pub fn with_psi(&self, psi: f64) -> Result<Self> {
        Self::new(self.family, psi, self.dim)
    }

    /// Kernel value as a function of the Euclidean distance `r`.
    #[inline]
    pub fn profile(&self, r: f64) -> f64 {
        match self.family {
            KernelFamily::Matern32 => {
                let s = r / self.psi;
                (1.0 + s) * (-s).exp()
            }
        }
    }

    /// Unchecked evaluation; both slices must have length `dim`.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.profile(r2.sqrt())
    }

    /// `K(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        for len in [x.len(), y.len()] {
            if len != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: len,
                });
            }
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// The vector `(K(p_1, x), ..., K(p_n, x))`.
    pub fn cross(&self, points: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        points.iter().map(|p| self.eval_unchecked(p, x)).collect()
    }
}

/// `Σ_ij = K(p_i, p_j)` plus diagonal jitter, validated by a Cholesky factorization.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    /// Kernel matrix without jitter.
    sigma: SymMatrix,
    jitter: f64,
    factor: CholFactor,
}

impl GramMatrix {
    /// Raw kernel matrix (jitter not included).
    pub fn raw(&self) -> &SymMatrix {
        &self.sigma
    }

    /// Kernel matrix with the jitter on the diagonal.
    pub fn with_jitter(&self) -> SymMatrix {
        let mut m = self.sigma.clone();
        m.add_diagonal(self.jitter);
        m
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn order(&self) -> usize {
        self.sigma.order()
    }

    /// Factor of `Σ + jitter I`.
    pub fn factor(&self) -> &CholFactor {
        &self.factor
    }

    /// Factor of `Σ + (jitter + shift) I`.
    pub fn shifted_factor(&self, shift: f64) -> Result<CholFactor> {
        cholesky_shifted(&self.sigma, self.jitter + shift)
    }
}

/// Raw kernel matrix of `points`, no jitter.
pub fn kernel_matrix(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<SymMatrix> {
    for p in points {
        if p.len() != spec.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.dim,
                got: p.len(),
            });
        }
    }
    Ok(SymMatrix::from_fn(points.len(), |i, j| {
        if i == j {
            1.0
        } else {
            spec.eval_unchecked(&points[i], &points[j])
        }
    }))
}

/// Gram matrix with jitter. If `Σ + jitter I` fails to factor, the jitter is
/// raised tenfold (starting no lower than [`DEFAULT_JITTER`]) until it would
/// pass [`MAX_JITTER`].
pub fn gram(spec: &KernelSpec, points: &[Vec<f64>], jitter: f64) -> Result<GramMatrix> {
    if !(jitter >= 0.0) {
        return Err(Error::InvalidInput(format!("jitter must be nonnegative, got {jitter}")));
    }
    let sigma = kernel_matrix(spec, points)?;
    let mut current = jitter;
    loop {
        match cholesky_shifted(&sigma, current) {
            Ok(factor) => {
                return Ok(GramMatrix {
                    sigma,
                    jitter: current,
                    factor,
                })
            }
            Err(err) => {
                let next = (current * 10.0).max(DEFAULT_JITTER);
                if next > MAX_JITTER * (1.0 + 1e-12) {
                    return Err(err);
                }
                current = next;
            }
        }
    }
}

/// Uniform tensor grid of `grid_size^dim` points on `[0,1]^dim`, endpoints included.
pub fn uniform_grid(grid_size: usize, dim: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..grid_size)
        .map(|i| i as f64 / (grid_size - 1) as f64)
        .collect();
    let mut points = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    points
}

/// Reusable grid approximation of `||g||_H^2`: the squared norm of the
/// minimum-norm interpolant of `g` on a uniform grid.
#[derive(Debug, Clone)]
pub struct GridNorm {
    grid: Vec<Vec<f64>>,
    gram: GramMatrix,
}

impl GridNorm {
    pub fn new(spec: &KernelSpec, grid_size: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::InvalidInput("grid_size must be at least 2".into()));
        }
        let grid = uniform_grid(grid_size, spec.dim());
        let gram = gram(spec, &grid, DEFAULT_JITTER)?;
        Ok(Self { grid, gram })
    }

    pub fn grid(&self) -> &[Vec<f64>] {
        &self.grid
    }

    /// `g(G)^T (Σ_G + jitter I)^{-1} g(G)`.
    pub fn norm_sq(&self, g: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let values: Vec<f64> = self.grid.iter().map(|p| g(p)).collect();
        self.gram.factor().inv_quad_form(&values)
    }
}

/// One-shot version of [`GridNorm::norm_sq`].
pub fn rkhs_norm_sq_approx(
    spec: &KernelSpec,
    g: impl Fn(&[f64]) -> f64,
    grid_size: usize,
) -> Result<f64> {
    GridNorm::new(spec, grid_size)?.norm_sq(g)
}
