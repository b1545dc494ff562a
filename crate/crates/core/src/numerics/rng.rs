//! Seeded random streams.
//!
//! Every stochastic quantity in the crate is drawn from a [`SeededRng`]: a
//! ChaCha8 stream keyed by a 64-bit seed. Child streams for trial `i` are
//! keyed by `derive_seed(parent, i)`, so results never depend on thread
//! scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};

use super::matrix::Matrix;

/// Name of the generator, recorded in experiment metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64); child seeds via SplitMix64";

#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream for sub-task `index`.
    pub fn split(&self, index: u64) -> SeededRng {
        SeededRng::new(derive_seed(self.seed, index))
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        assert!(lo < hi, "uniform: empty range [{lo}, {hi})");
        Uniform::new(lo, hi)
            .expect("finite non-empty range")
            .sample(&mut self.inner)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }

    /// Uniform integer in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Vector of `len` i.i.d. uniform draws on `[lo, hi)`.
    pub fn uniform_vec(&mut self, len: usize, lo: f64, hi: f64) -> Vec<f64> {
        assert!(lo < hi, "uniform: empty range [{lo}, {hi})");
        let dist = Uniform::new(lo, hi).expect("finite non-empty range");
        (0..len).map(|_| dist.sample(&mut self.inner)).collect()
    }

    /// Fills `out` with i.i.d. N(0, std²) draws.
    pub fn fill_normal(&mut self, std: f64, out: &mut [f64]) {
        for v in out {
            *v = std * self.standard_normal();
        }
    }
}

/// SplitMix64 finalizer applied to the parent seed and child index.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// i.i.d. uniform entries on `[lo, hi)`, drawn in row-major order.
pub fn uniform_matrix(rng: &mut SeededRng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    assert!(lo < hi, "uniform_matrix: empty range [{lo}, {hi})");
    let dist = Uniform::new(lo, hi).expect("finite non-empty range");
    let data = (0..rows * cols).map(|_| dist.sample(&mut rng.inner)).collect();
    Matrix::new(rows, cols, data).expect("positive dimensions")
}

/// i.i.d. N(mean, std²) entries, drawn in row-major order.
pub fn gaussian_matrix(rng: &mut SeededRng, rows: usize, cols: usize, mean: f64, std: f64) -> Matrix {
    assert!(std >= 0.0 && std.is_finite(), "gaussian_matrix: std must be finite and >= 0");
    let dist = Normal::new(mean, std).expect("valid normal parameters");
    let data = (0..rows * cols).map(|_| dist.sample(&mut rng.inner)).collect();
    Matrix::new(rows, cols, data).expect("positive dimensions")
}
