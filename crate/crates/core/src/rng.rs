//! Seeded, splittable random streams.
//!
//! A stream is identified by `(seed, stream_id)`. The pair is fed to a
//! ChaCha8 generator (seed from the master seed, stream from the id), so any
//! replicate can be regenerated on any thread in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bounds::ParamBox;

/// Master seed used when none is supplied.
pub const DEFAULT_SEED: u64 = 20240101;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream keyed by this stream's identity and `tag`.
    ///
    /// Depends only on `(seed, stream_id, tag)`, never on how many draws were
    /// taken from `self`.
    pub fn derive(&self, tag: u64) -> RngStream {
        let id = splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D)));
        RngStream::new(self.seed, id)
    }

    pub fn next_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random::<u64>()
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    /// A point with i.i.d. Unif[0,1] coordinates.
    pub fn uniform(&mut self, d: usize) -> Vec<f64> {
        assert!(d >= 1, "uniform: dimension must be at least 1");
        (0..d).map(|_| self.next_f64()).collect()
    }

    /// One N(0, sigma^2) draw (ziggurat).
    pub fn normal(&mut self, sigma: f64) -> f64 {
        assert!(sigma >= 0.0, "normal: sigma must be nonnegative");
        let z: f64 = self.rng.sample(StandardNormal);
        if sigma == 0.0 {
            0.0
        } else {
            sigma * z
        }
    }

    /// Fisher-Yates permutation of `0..k`.
    pub fn permutation(&mut self, k: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            let j = self.below(i + 1);
            perm.swap(i, j);
        }
        perm
    }

    /// `k` Latin-hypercube points in `bounds`: along every axis each of the
    /// `k` equal strata holds exactly one point.
    pub fn latin_hypercube(&mut self, k: usize, bounds: &ParamBox) -> Vec<Vec<f64>> {
        assert!(k >= 1, "latin_hypercube: k must be at least 1");
        let d = bounds.dim();
        let mut points = vec![vec![0.0; d]; k];
        for j in 0..d {
            let perm = self.permutation(k);
            for (i, p) in points.iter_mut().enumerate() {
                let u = (perm[i] as f64 + self.next_f64()) / k as f64;
                p[j] = (bounds.lower()[j] + u * bounds.width(j)).min(bounds.upper()[j]);
            }
        }
        points
    }
}
