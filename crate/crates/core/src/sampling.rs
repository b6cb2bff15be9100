//! Seeded Monte Carlo plumbing: stream splitting, block-parallel
//! accumulation of means and covariances, and uniform sampling on spheres
//! and balls.
//!
//! Splitting rule: a run with seed `s` and `count` samples is cut into
//! blocks of [`BLOCK_SIZE`]; block `b` draws from `ChaCha8Rng` seeded with
//! `s` on stream `b`. Blocks run in parallel on the current rayon pool and
//! their statistics are merged in block order, so a given `(seed, count)`
//! always produces the same bits whatever the worker count.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

pub type Rng = ChaCha8Rng;

pub const BLOCK_SIZE: usize = 8192;

pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive an independent child seed from `(seed, label)` with SplitMix64.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
            samples: 0,
        }
    }

    /// `|value - target| <= k * std_error`, with a `1e-12` relative floor
    /// so zero-variance estimates survive rounding.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + 1e-12 * target.abs()
    }
}

/// Running mean and co-moment matrix of a `K`-vector (Welford/Chan).
#[derive(Debug, Clone, Copy)]
pub struct Stats<const K: usize> {
    count: u64,
    mean: [f64; K],
    comoment: [[f64; K]; K],
}

impl<const K: usize> Default for Stats<K> {
    fn default() -> Self {
        Stats {
            count: 0,
            mean: [0.0; K],
            comoment: [[0.0; K]; K],
        }
    }
}

impl<const K: usize> Stats<K> {
    pub fn push(&mut self, x: [f64; K]) {
        self.count += 1;
        let n = self.count as f64;
        let mut delta = [0.0; K];
        for i in 0..K {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / n;
        }
        for i in 0..K {
            for j in 0..K {
                self.comoment[i][j] += delta[i] * (x[j] - self.mean[j]);
            }
        }
    }

    pub fn merge(&mut self, other: &Stats<K>) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let mut delta = [0.0; K];
        for i in 0..K {
            delta[i] = other.mean[i] - self.mean[i];
        }
        for i in 0..K {
            for j in 0..K {
                self.comoment[i][j] += other.comoment[i][j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..K {
            self.mean[i] += delta[i] * nb / n;
        }
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.comoment[i][j] / (self.count as f64 - 1.0)
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance(i, i).max(0.0)
    }

    pub fn std_error(&self, i: usize) -> f64 {
        if self.count == 0 {
            return f64::INFINITY;
        }
        (self.variance(i) / self.count as f64).sqrt()
    }

    /// Standard error of the sample mean of `Σ_i g_i x_i`.
    pub fn linear_std_error(&self, gradient: [f64; K]) -> f64 {
        let mut var = 0.0;
        for i in 0..K {
            for j in 0..K {
                var += gradient[i] * gradient[j] * self.covariance(i, j);
            }
        }
        (var.max(0.0) / self.count.max(1) as f64).sqrt()
    }

    pub fn estimate(&self, i: usize) -> Estimate {
        Estimate {
            value: self.mean(i),
            std_error: self.std_error(i),
            samples: self.count,
        }
    }
}

/// Draw `count` samples of `f` and accumulate their statistics.
///
/// `init` builds per-block scratch state (sample buffers and the like).
pub fn accumulate<const K: usize, S, I, F>(count: usize, seed: u64, init: I, f: F) -> Stats<K>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut Rng, &mut S) -> [f64; K] + Sync,
{
    let blocks = count.div_ceil(BLOCK_SIZE);
    let partials: Vec<Stats<K>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let mut scratch = init();
            let len = BLOCK_SIZE.min(count - b * BLOCK_SIZE);
            let mut stats = Stats::default();
            for _ in 0..len {
                stats.push(f(&mut rng, &mut scratch));
            }
            stats
        })
        .collect();
    let mut total = Stats::default();
    for p in &partials {
        total.merge(p);
    }
    total
}

/// Fill `out` with a point uniform on the unit sphere `S^{n-1}`, `n = out.len()`.
pub fn fill_unit_sphere(rng: &mut Rng, out: &mut [f64]) {
    loop {
        let mut norm_sq = 0.0;
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
            norm_sq += *v * *v;
        }
        if norm_sq > 1e-300 {
            let inv = norm_sq.sqrt().recip();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// Fill `out` with a point uniform in the unit ball of `R^n`.
pub fn fill_unit_ball(rng: &mut Rng, out: &mut [f64]) {
    fill_unit_sphere(rng, out);
    let u: f64 = rng.random();
    let radius = u.powf(1.0 / out.len() as f64);
    out.iter_mut().for_each(|v| *v *= radius);
}

/// `count` points uniform on the sphere of radius `radius` in `R^dim`.
pub fn sphere_points(dim: usize, radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let blocks = count.div_ceil(BLOCK_SIZE);
    let chunks: Vec<Vec<Vec<f64>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let len = BLOCK_SIZE.min(count - b * BLOCK_SIZE);
            (0..len)
                .map(|_| {
                    let mut p = vec![0.0; dim];
                    fill_unit_sphere(&mut rng, &mut p);
                    p.iter_mut().for_each(|v| *v *= radius);
                    p
                })
                .collect()
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
