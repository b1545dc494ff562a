//! Uniform random hyperparameter search over (ρ, ω, mix).

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{derive_seed, format_real, SeededRng};
use crate::reservoir::{ModelKind, ReservoirConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    /// Kind, size and any fixed fields; ρ, ω, mix and seed are overwritten.
    pub base: ReservoirConfig,
    pub rho: (f64, f64),
    pub omega: (f64, f64),
    /// Ignored for kinds without a free mix.
    pub mix: (f64, f64),
}

impl SearchSpace {
    /// ρ ∈ [0.8, 1.2], ω ∈ [0, 0.4], and α ∈ (0.1, 1) for the leaky ESN or
    /// β ∈ (0.01, 0.1) for ES2N.
    pub fn mso_default(kind: ModelKind, n_r: usize) -> Self {
        let mix = match kind {
            ModelKind::LeakyEsn => (0.1, 1.0),
            ModelKind::Es2n => (0.01, 0.1),
            _ => (1.0, 1.0),
        };
        Self {
            base: ReservoirConfig::new(kind, n_r),
            rho: (0.8, 1.2),
            omega: (0.0, 0.4),
            mix,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("rho", self.rho), ("omega", self.omega), ("mix", self.mix)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("{name} range [{lo}, {hi}] is invalid")));
            }
        }
        if self.base.kind.has_mix() && !(self.mix.0 > 0.0 && self.mix.1 <= 1.0) {
            return Err(Error::InvalidArgument("mix range must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Configuration of trial `index` under `master_seed`.
    pub fn sample(&self, master_seed: u64, index: usize) -> ReservoirConfig {
        let mut rng = SeededRng::new(derive_seed(master_seed, index as u64));
        let rho = rng.uniform(self.rho.0, self.rho.1);
        let omega = rng.uniform(self.omega.0, self.omega.1);
        let mix = if self.base.kind.has_mix() {
            rng.uniform(self.mix.0, self.mix.1)
        } else {
            1.0
        };
        self.base
            .with_rho(rho)
            .with_omega(omega)
            .with_mix(mix)
            .with_seed(rng.next_u64())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub config: ReservoirConfig,
    /// Objective value; `inf` for failed trials.
    pub value: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub trials: Vec<TrialRecord>,
    /// Index of the smallest finite value (lowest index on ties).
    pub best: Option<usize>,
}

impl SearchOutcome {
    pub fn best_trial(&self) -> Option<&TrialRecord> {
        self.best.map(|i| &self.trials[i])
    }

    pub fn failures(&self) -> usize {
        self.trials.iter().filter(|t| t.error.is_some()).count()
    }

    pub fn finite_values(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.value).filter(|v| v.is_finite()).collect()
    }
}

/// Evaluates `objective` on `n_trials` sampled configurations. Errors are
/// recorded per trial and never stop the search; NaN values count as `inf`.
pub fn random_search<F>(space: &SearchSpace, n_trials: usize, master_seed: u64, objective: F) -> Result<SearchOutcome>
where
    F: Fn(&ReservoirConfig) -> Result<f64> + Sync,
{
    space.validate()?;
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be >= 1".into()));
    }
    let trials: Vec<TrialRecord> = (0..n_trials)
        .into_par_iter()
        .map(|trial| record(trial, space.sample(master_seed, trial), &objective))
        .collect();
    let best = best_index(&trials);
    Ok(SearchOutcome { trials, best })
}

pub fn record<F>(trial: usize, config: ReservoirConfig, objective: &F) -> TrialRecord
where
    F: Fn(&ReservoirConfig) -> Result<f64>,
{
    match objective(&config) {
        Ok(v) => TrialRecord {
            trial,
            config,
            value: if v.is_nan() { f64::INFINITY } else { v },
            error: None,
        },
        Err(e) => TrialRecord {
            trial,
            config,
            value: f64::INFINITY,
            error: Some(e.to_string()),
        },
    }
}

pub fn best_index(trials: &[TrialRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, t) in trials.iter().enumerate() {
        if t.value.is_finite() && best.map_or(true, |b| t.value < trials[b].value) {
            best = Some(i);
        }
    }
    best
}

pub const SEARCH_CSV_HEADER: &str = "trial,model,rho,omega,mix,seed,nrmse,error";

pub fn write_search_row<W: Write>(mut w: W, t: &TrialRecord) -> io::Result<()> {
    let err = t.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
    writeln!(
        w,
        "{},{},{},{},{},{},{},{err}",
        t.trial,
        t.config.kind,
        format_real(t.config.rho),
        format_real(t.config.omega),
        format_real(t.config.mix),
        t.config.seed,
        format_real(t.value)
    )
}

pub fn write_search_csv<W: Write>(mut w: W, outcome: &SearchOutcome) -> io::Result<()> {
    writeln!(w, "{SEARCH_CSV_HEADER}")?;
    for t in &outcome.trials {
        write_search_row(&mut w, t)?;
    }
    Ok(())
}
