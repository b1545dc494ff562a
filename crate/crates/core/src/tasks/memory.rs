//! Short-term memory capacity: reconstruct `u[t - k]` from `x[t]` for
//! `k = 1..=k_max` and sum the squared correlations on a held-out window.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{mean_std, squared_correlation};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, format_real, ridge_solve, Matrix, SeededRng};
use crate::reservoir::{ModelKind, Reservoir, ReservoirConfig};

const INPUT_STREAM: u64 = 0x4d43_5f49_4e50_5554;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    /// Total driven steps T.
    pub length: usize,
    /// Last training step; steps `train_end + 1 ..= length` are the test set.
    pub train_end: usize,
    /// Steps `1..=washout` are excluded from the fit. Must be at least
    /// `k_max` so every delay is defined on the whole training window.
    pub washout: usize,
    pub k_max: usize,
    /// Inputs are uniform in `[-input_amplitude, input_amplitude]`.
    pub input_amplitude: f64,
    pub mu: f64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            length: 6000,
            train_end: 5000,
            washout: 200,
            k_max: 200,
            input_amplitude: 0.8,
            mu: 1e-8,
        }
    }
}

impl McSettings {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be >= 1".into()));
        }
        if self.washout < self.k_max {
            return Err(Error::InvalidArgument(format!(
                "washout ({}) must be >= k_max ({})",
                self.washout, self.k_max
            )));
        }
        if self.washout >= self.train_end || self.train_end + 2 > self.length {
            return Err(Error::InvalidArgument(format!(
                "need washout < train_end <= length - 2, got {} / {} / {}",
                self.washout, self.train_end, self.length
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub kind: ModelKind,
    pub mix: f64,
    pub seed: u64,
    /// Sum of `mc_k`.
    pub mc: f64,
    /// `mc_k[k - 1]` is the capacity for delay `k`; empty for a failed run.
    pub mc_k: Vec<f64>,
    /// Set when the drive or the readout fit failed; `mc` is then 0.
    pub error: Option<String>,
}

impl McResult {
    pub fn failed(config: &ReservoirConfig, error: &Error) -> Self {
        Self {
            kind: config.kind,
            mix: config.mix,
            seed: config.seed,
            mc: 0.0,
            mc_k: Vec::new(),
            error: Some(error.to_string()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Memory capacity of one reservoir; the reservoir is drawn from
/// `config.seed` and the input stream from a seed derived from it.
pub fn mc_task(config: &ReservoirConfig, settings: &McSettings) -> Result<McResult> {
    settings.validate()?;
    if config.n_i != 1 {
        return Err(Error::dims("memory capacity input", 1, config.n_i));
    }
    let reservoir = Reservoir::new(*config)?;
    let mut rng = SeededRng::new(derive_seed(config.seed, INPUT_STREAM));
    let a = settings.input_amplitude;
    let u = rng.uniform_vec(settings.length, -a, a);
    let traj = reservoir.drive(&Matrix::row_vector(&u), None, None)?;

    let k_max = settings.k_max;
    // u[t] is u[t - 1] in 0-based storage; x[t] is column t of the states.
    let delayed = |k: usize, t: usize| u[t - k - 1];
    let train = settings.washout + 1..settings.train_end + 1;
    let test = settings.train_end + 1..settings.length + 1;

    let x_train = traj.states.columns(train.clone());
    let y_train = Matrix::from_fn(k_max, train.len(), |i, j| delayed(i + 1, train.start + j));
    let w_o = ridge_solve(&x_train, &y_train, settings.mu)?;

    let x_test = traj.states.columns(test.clone());
    let z = w_o.matmul(&x_test)?;
    let mut target = vec![0.0; test.len()];
    let mc_k: Vec<f64> = (1..=k_max)
        .map(|k| {
            for (j, t) in test.clone().enumerate() {
                target[j] = delayed(k, t);
            }
            squared_correlation(z.row(k - 1), &target)
        })
        .collect();
    Ok(McResult {
        kind: config.kind,
        mix: config.mix,
        seed: config.seed,
        mc: mc_k.iter().sum(),
        mc_k,
        error: None,
    })
}

/// `n` values `a · 10^(-s)` with `a ~ U(0.1, 1)` and `s` drawn uniformly from
/// `exponents`, sorted ascending, with `1.0` appended if absent.
pub fn mix_grid(n: usize, exponents: &[u32], seed: u64) -> Vec<f64> {
    assert!(!exponents.is_empty(), "mix_grid needs at least one exponent");
    let mut rng = SeededRng::new(seed);
    let mut grid: Vec<f64> = (0..n)
        .map(|_| {
            let a = rng.uniform(0.1, 1.0);
            let s = exponents[rng.index(exponents.len())];
            a * 10f64.powi(-(s as i32))
        })
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.last() != Some(&1.0) {
        grid.push(1.0);
    }
    grid
}

/// Reservoir seed for the `index`-th initialization at grid point `point`.
pub fn sweep_seed(master: u64, point: usize, index: usize) -> u64 {
    derive_seed(derive_seed(master, point as u64), index as u64)
}

/// `mc_task`, with a failure recorded as [`McResult::failed`].
pub fn mc_trial(config: &ReservoirConfig, settings: &McSettings) -> McResult {
    mc_task(config, settings).unwrap_or_else(|e| McResult::failed(config, &e))
}

/// Runs `mc_task` for every `(mix, seed)` pair, drawing a fresh reservoir
/// for each pair. `base` supplies kind, size and scalings; kinds without a
/// free mix ignore `mixes` and use a single point at 1. Failed pairs are
/// kept (with MC 0) so the sweep always completes.
pub fn mc_sweep(
    base: &ReservoirConfig,
    mixes: &[f64],
    n_seeds: usize,
    master_seed: u64,
    settings: &McSettings,
) -> Result<Vec<McResult>> {
    settings.validate()?;
    let points: Vec<f64> = if base.kind.has_mix() { mixes.to_vec() } else { vec![1.0] };
    for &m in &points {
        base.with_mix(m).validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..n_seeds).map(move |s| (p, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(p, s)| {
            let config = base
                .with_mix(points[p])
                .with_seed(sweep_seed(master_seed, p, s));
            mc_trial(&config, settings)
        })
        .collect::<Vec<_>>();
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub kind: ModelKind,
    pub mix: f64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub failed: usize,
}

/// Groups results by `(kind, mix)` in first-appearance order.
pub fn summarize(results: &[McResult]) -> Vec<McSummary> {
    let mut keys: Vec<(ModelKind, f64)> = Vec::new();
    for r in results {
        if !keys.iter().any(|&(k, m)| k == r.kind && m == r.mix) {
            keys.push((r.kind, r.mix));
        }
    }
    keys.into_iter()
        .map(|(kind, mix)| {
            let group: Vec<&McResult> = results.iter().filter(|r| r.kind == kind && r.mix == mix).collect();
            let mcs: Vec<f64> = group.iter().map(|r| r.mc).collect();
            let (mean, std) = mean_std(&mcs);
            McSummary {
                kind,
                mix,
                mean,
                std,
                n: mcs.len(),
                failed: group.iter().filter(|r| r.is_failed()).count(),
            }
        })
        .collect()
}

/// `model,mix,seed,k,mc_k`
pub fn write_mc_k_csv<W: Write>(mut w: W, results: &[McResult]) -> io::Result<()> {
    writeln!(w, "model,mix,seed,k,mc_k")?;
    for r in results {
        write_mc_k_rows(&mut w, r)?;
    }
    Ok(())
}

pub fn write_mc_k_rows<W: Write>(mut w: W, r: &McResult) -> io::Result<()> {
    for (i, v) in r.mc_k.iter().enumerate() {
        writeln!(w, "{},{},{},{},{}", r.kind, format_real(r.mix), r.seed, i + 1, format_real(*v))?;
    }
    Ok(())
}

/// `model,mix,mean_mc,std_mc,n_seeds,n_failed`
pub fn write_mc_summary_csv<W: Write>(mut w: W, summary: &[McSummary]) -> io::Result<()> {
    writeln!(w, "model,mix,mean_mc,std_mc,n_seeds,n_failed")?;
    for s in summary {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.kind,
            format_real(s.mix),
            format_real(s.mean),
            format_real(s.std),
            s.n,
            s.failed
        )?;
    }
    Ok(())
}
