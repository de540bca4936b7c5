//! Multi-start Nelder–Mead on a box.
//!
//! Trial points that leave the box are folded back in by mirror reflection,
//! so every evaluated point is feasible.

use crate::bounds::ParamBox;
use crate::error::{Error, Result};
use crate::par;
use crate::rng::RngStream;

pub const DEFAULT_STARTS: usize = 10;
pub const DIAMETER_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 500;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const INITIAL_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxOptimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Number of local searches run (Latin-hypercube starts plus supplied ones).
    pub starts: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
struct LocalResult {
    point: Vec<f64>,
    value: f64,
    evaluations: usize,
}

/// Minimizes `objective` over `bounds` from `starts` Latin-hypercube points
/// plus every point in `extra_starts`.
///
/// The best terminal point wins; exact ties go to the lexicographically
/// smallest point. The result never exceeds the objective at any start.
pub fn minimize_box<F>(
    objective: F,
    bounds: &ParamBox,
    starts: usize,
    stream: &RngStream,
    extra_starts: &[Vec<f64>],
) -> Result<BoxOptimum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if starts == 0 && extra_starts.is_empty() {
        return Err(Error::InvalidInput("at least one start is required".into()));
    }
    let mut initial: Vec<Vec<f64>> = Vec::with_capacity(starts + extra_starts.len());
    for p in extra_starts {
        if p.len() != bounds.dim() {
            return Err(Error::DimensionMismatch {
                expected: bounds.dim(),
                got: p.len(),
            });
        }
        let mut q = p.clone();
        bounds.reflect(&mut q);
        initial.push(q);
    }
    if starts > 0 {
        let mut lhs_stream = stream.clone();
        initial.extend(lhs_stream.latin_hypercube(starts, bounds));
    }

    let results = par::map_slice(&initial, |x0| nelder_mead(&objective, bounds, x0));
    let mut best: Option<LocalResult> = None;
    let mut evaluations = 0;
    for r in results {
        let r = r?;
        evaluations += r.evaluations;
        best = match best {
            None => Some(r),
            Some(b) => {
                let better = r.value < b.value
                    || (r.value == b.value && lex_less(&r.point, &b.point));
                Some(if better { r } else { b })
            }
        };
    }
    let best = best.expect("at least one start");
    Ok(BoxOptimum {
        point: best.point,
        value: best.value,
        starts: initial.len(),
        evaluations,
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

fn evaluate<F: Fn(&[f64]) -> f64>(objective: &F, x: &[f64], count: &mut usize) -> Result<f64> {
    *count += 1;
    let v = objective(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::ObjectiveNonFinite { point: x.to_vec() })
    }
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    objective: &F,
    bounds: &ParamBox,
    x0: &[f64],
) -> Result<LocalResult> {
    let dim = x0.len();
    let mut evaluations = 0;

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for j in 0..dim {
        let mut v = x0.to_vec();
        let step = INITIAL_STEP * bounds.width(j);
        // step toward the interior so the vertex stays distinct from x0
        if v[j] + step <= bounds.upper()[j] {
            v[j] += step;
        } else {
            v[j] -= step;
        }
        simplex.push(v);
    }
    let mut values = Vec::with_capacity(dim + 1);
    for v in &simplex {
        values.push(evaluate(objective, v, &mut evaluations)?);
    }

    let trial = |coef: f64, centroid: &[f64], worst: &[f64]| -> Vec<f64> {
        let mut p: Vec<f64> = centroid
            .iter()
            .zip(worst)
            .map(|(c, w)| c + coef * (c - w))
            .collect();
        bounds.reflect(&mut p);
        p
    };

    for _ in 0..MAX_ITERATIONS {
        // order vertices by value, ties by position for determinism
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| {
            values[a]
                .total_cmp(&values[b])
                .then_with(|| {
                    if lex_less(&simplex[a], &simplex[b]) {
                        std::cmp::Ordering::Less
                    } else if lex_less(&simplex[b], &simplex[a]) {
                        std::cmp::Ordering::Greater
                    } else {
                        std::cmp::Ordering::Equal
                    }
                })
        });
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < DIAMETER_TOL {
            break;
        }

        let worst = dim;
        let mut centroid = vec![0.0; dim];
        for v in &simplex[..worst] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }

        let xr = trial(REFLECT, &centroid, &simplex[worst]);
        let fr = evaluate(objective, &xr, &mut evaluations)?;
        if fr < values[0] {
            let xe = trial(EXPAND, &centroid, &simplex[worst]);
            let fe = evaluate(objective, &xe, &mut evaluations)?;
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[worst - 1] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        // contraction: outside if the reflection improved on the worst, else inside
        let (xc, fc) = if fr < values[worst] {
            let xc = trial(CONTRACT, &centroid, &simplex[worst]);
            let fc = evaluate(objective, &xc, &mut evaluations)?;
            (xc, fc)
        } else {
            let xc = trial(-CONTRACT, &centroid, &simplex[worst]);
            let fc = evaluate(objective, &xc, &mut evaluations)?;
            (xc, fc)
        };
        if fc < values[worst].min(fr) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=dim {
            let mut p: Vec<f64> = best
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + SHRINK * (v - b))
                .collect();
            bounds.reflect(&mut p);
            values[i] = evaluate(objective, &p, &mut evaluations)?;
            simplex[i] = p;
        }
    }

    let (mut bi, mut bv) = (0, values[0]);
    for (i, &v) in values.iter().enumerate() {
        if v < bv || (v == bv && lex_less(&simplex[i], &simplex[bi])) {
            bi = i;
            bv = v;
        }
    }
    Ok(LocalResult {
        point: simplex[bi].clone(),
        value: bv,
        evaluations,
    })
}
