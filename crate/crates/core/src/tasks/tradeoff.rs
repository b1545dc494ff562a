//! Memory/nonlinearity trade-off: predict `y[t] = sin(ν u[t - τ])` from
//! `x[t]` over a grid of delays `τ` and strengths `ν`, keeping the best of
//! a number of randomly drawn reservoirs per grid cell.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::nrmse;
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, format_real, ridge_solve, Matrix, SeededRng};
use crate::reservoir::{ModelKind, Reservoir, ReservoirConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffSettings {
    pub n_r: usize,
    pub length: usize,
    pub train_end: usize,
    pub washout: usize,
    pub mu: f64,
    pub rho_range: (f64, f64),
    pub omega_range: (f64, f64),
    /// Mix values are `a · 10^(-s)` with `a ~ U(0.1, 1)`, `s` from this list.
    pub mix_exponents: Vec<u32>,
}

impl Default for TradeoffSettings {
    fn default() -> Self {
        Self {
            n_r: 100,
            length: 6000,
            train_end: 5000,
            washout: 100,
            mu: 1e-8,
            rho_range: (0.1, 3.0),
            omega_range: (0.2, 6.0),
            mix_exponents: vec![0, 1],
        }
    }
}

/// Delays `1..=20` and natural-log strengths `-1.6, -1.5, ..., 1.6`.
pub fn default_axes() -> (Vec<usize>, Vec<f64>) {
    let taus = (1..=20).collect();
    let log_nus = (-16..=16).map(|i| i as f64 / 10.0).collect();
    (taus, log_nus)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCell {
    pub tau: usize,
    /// Natural logarithm of ν.
    pub log_nu: f64,
    pub nu: f64,
    /// Smallest finite test NRMSE over the trials, `inf` if none was finite.
    pub best_nrmse: f64,
    pub best_trial: Option<usize>,
    pub best_config: Option<ReservoirConfig>,
    /// Trials whose drive or fit failed (excluded from every cell).
    pub failed_trials: usize,
}

/// Per-trial outcome: the sampled configuration and either one NRMSE per
/// cell (row-major over `taus x log_nus`) or the error message.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffTrial {
    pub config: ReservoirConfig,
    pub outcome: std::result::Result<Vec<f64>, String>,
}

pub fn sample_config(kind: ModelKind, settings: &TradeoffSettings, trial_seed: u64) -> ReservoirConfig {
    let mut rng = SeededRng::new(trial_seed);
    let rho = rng.uniform(settings.rho_range.0, settings.rho_range.1);
    let omega = rng.uniform(settings.omega_range.0, settings.omega_range.1);
    let mix = if kind.has_mix() {
        let a = rng.uniform(0.1, 1.0);
        let s = settings.mix_exponents[rng.index(settings.mix_exponents.len())];
        a * 10f64.powi(-(s as i32))
    } else {
        1.0
    };
    ReservoirConfig::new(kind, settings.n_r)
        .with_rho(rho)
        .with_omega(omega)
        .with_mix(mix)
        .with_seed(rng.next_u64())
}

/// Drives one reservoir and scores it on every cell with a single
/// multi-output ridge fit.
pub fn evaluate_trial(
    config: &ReservoirConfig,
    settings: &TradeoffSettings,
    taus: &[usize],
    log_nus: &[f64],
) -> Result<Vec<f64>> {
    let max_tau = taus.iter().copied().max().unwrap_or(0);
    if max_tau > settings.washout {
        return Err(Error::InvalidArgument(format!(
            "largest delay ({max_tau}) exceeds the washout ({})",
            settings.washout
        )));
    }
    if settings.washout >= settings.train_end || settings.train_end + 2 > settings.length {
        return Err(Error::InvalidArgument("need washout < train_end <= length - 2".into()));
    }
    let reservoir = Reservoir::new(*config)?;
    let mut rng = SeededRng::new(derive_seed(config.seed, 1));
    let u = rng.uniform_vec(settings.length, -1.0, 1.0);
    let traj = reservoir.drive(&Matrix::row_vector(&u), None, None)?;

    let cells: Vec<(usize, f64)> = taus
        .iter()
        .flat_map(|&tau| log_nus.iter().map(move |&l| (tau, l.exp())))
        .collect();
    // Target at 1-based step t for cell c.
    let target = |c: usize, t: usize| {
        let (tau, nu) = cells[c];
        (nu * u[t - tau - 1]).sin()
    };
    let train = settings.washout + 1..settings.train_end + 1;
    let test = settings.train_end + 1..settings.length + 1;

    let x_train = traj.states.columns(train.clone());
    let y_train = Matrix::from_fn(cells.len(), train.len(), |c, j| target(c, train.start + j));
    let w_o = ridge_solve(&x_train, &y_train, settings.mu)?;
    let z = w_o.matmul(&traj.states.columns(test.clone()))?;

    let mut y = vec![0.0; test.len()];
    (0..cells.len())
        .map(|c| {
            for (j, t) in test.clone().enumerate() {
                y[j] = target(c, t);
            }
            let v = nrmse(&y, z.row(c))?;
            Ok(if v.is_nan() { f64::INFINITY } else { v })
        })
        .collect()
}

/// Runs `n_trials` random reservoirs of `kind` (trial `i` seeded with
/// `derive_seed(search_seed, i)`) and returns the trials in index order.
pub fn tradeoff_trials(
    kind: ModelKind,
    settings: &TradeoffSettings,
    taus: &[usize],
    log_nus: &[f64],
    n_trials: usize,
    search_seed: u64,
) -> Vec<TradeoffTrial> {
    (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let config = sample_config(kind, settings, derive_seed(search_seed, i as u64));
            let outcome = evaluate_trial(&config, settings, taus, log_nus).map_err(|e| e.to_string());
            TradeoffTrial { config, outcome }
        })
        .collect()
}

/// Best trial per cell; ties go to the lowest trial index.
pub fn best_cells(trials: &[TradeoffTrial], taus: &[usize], log_nus: &[f64]) -> Vec<TradeoffCell> {
    let failed_trials = trials.iter().filter(|t| t.outcome.is_err()).count();
    let mut cells = Vec::with_capacity(taus.len() * log_nus.len());
    for (ti, &tau) in taus.iter().enumerate() {
        for (li, &log_nu) in log_nus.iter().enumerate() {
            let c = ti * log_nus.len() + li;
            let mut best: Option<(usize, f64)> = None;
            for (i, trial) in trials.iter().enumerate() {
                if let Ok(values) = &trial.outcome {
                    let v = values[c];
                    if v.is_finite() && best.map_or(true, |(_, b)| v < b) {
                        best = Some((i, v));
                    }
                }
            }
            cells.push(TradeoffCell {
                tau,
                log_nu,
                nu: log_nu.exp(),
                best_nrmse: best.map_or(f64::INFINITY, |(_, v)| v),
                best_trial: best.map(|(i, _)| i),
                best_config: best.map(|(i, _)| trials[i].config),
                failed_trials,
            });
        }
    }
    cells
}

pub fn tradeoff_grid(
    kind: ModelKind,
    settings: &TradeoffSettings,
    taus: &[usize],
    log_nus: &[f64],
    n_trials: usize,
    search_seed: u64,
) -> Vec<TradeoffCell> {
    let trials = tradeoff_trials(kind, settings, taus, log_nus, n_trials, search_seed);
    best_cells(&trials, taus, log_nus)
}

/// `model,tau,log_nu,best_nrmse,best_trial`
pub fn write_tradeoff_csv<W: Write>(mut w: W, kind: ModelKind, cells: &[TradeoffCell]) -> io::Result<()> {
    writeln!(w, "model,tau,log_nu,best_nrmse,best_trial")?;
    for c in cells {
        let trial = c.best_trial.map_or(String::new(), |i| i.to_string());
        writeln!(w, "{kind},{},{},{},{trial}", c.tau, format_real(c.log_nu), format_real(c.best_nrmse))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TradeoffSettings {
        TradeoffSettings {
            n_r: 30,
            length: 1500,
            train_end: 1200,
            washout: 50,
            ..TradeoffSettings::default()
        }
    }

    #[test]
    fn linear_reservoir_solves_weak_nonlinearity() {
        let config = ReservoirConfig::new(ModelKind::LinearScr, 30).with_rho(0.9).with_omega(0.5).with_seed(2);
        let v = evaluate_trial(&config, &small(), &[1], &[-4.0]).unwrap();
        assert!(v[0] < 0.05, "{v:?}");
    }

    #[test]
    fn sampled_configs_respect_ranges() {
        let s = TradeoffSettings::default();
        for i in 0..200 {
            let c = sample_config(ModelKind::Es2n, &s, i);
            assert!((0.1..3.0).contains(&c.rho) && (0.2..6.0).contains(&c.omega));
            assert!(c.mix > 0.01 && c.mix < 1.0);
            assert_eq!(c.n_r, 100);
            assert_eq!(sample_config(ModelKind::LinearScr, &s, i).mix, 1.0);
        }
    }

    #[test]
    fn grid_is_deterministic_and_records_failures() {
        let s = small();
        let a = tradeoff_grid(ModelKind::LinearScr, &s, &[1, 5], &[-1.0, 1.0], 6, 11);
        let b = tradeoff_grid(ModelKind::LinearScr, &s, &[1, 5], &[-1.0, 1.0], 6, 11);
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_eq!((a[1].tau, a[1].log_nu), (1, 1.0));
        assert!(a.iter().all(|c| c.best_nrmse >= 0.0));
        let trials = tradeoff_trials(ModelKind::LinearScr, &s, &[1], &[0.0], 6, 11);
        let failures = trials.iter().filter(|t| t.outcome.is_err()).count();
        assert_eq!(a[0].failed_trials, failures);
    }

    #[test]
    fn rejects_delays_beyond_washout() {
        let config = ReservoirConfig::new(ModelKind::Es2n, 10).with_mix(0.5);
        assert!(evaluate_trial(&config, &small(), &[51], &[0.0]).is_err());
    }

    #[test]
    fn default_axes_shape() {
        let (taus, nus) = default_axes();
        assert_eq!(taus.len(), 20);
        assert_eq!(nus.len(), 33);
        assert_eq!(nus[16], 0.0);
    }
}
