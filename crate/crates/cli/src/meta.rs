//! `meta.json` sidecar. CSV bodies never carry timestamps; this file does.

use std::fs;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde_json::{json, Value};

use es2n::numerics::RNG_ALGORITHM;

use crate::run::Outcome;
use crate::spec::ExperimentSpec;

/// Modelling and numerical choices in force for every run.
pub const DECISIONS: &[&str] = &[
    "ES2N update: x' = mix*tanh(rho*W_r*x + omega*W_in*u) + (1 - mix)*O*x with O a random orthogonal matrix",
    "weights drawn in the order W_in ~ U(-1, 1), W_r, O; W_r ~ N(0, 1/n_r) (orthogonal for ortho_esn, a cyclic shift for linear_scr)",
    "rho multiplies W_r as drawn; the realized spectral radius is not renormalized",
    "x0 = 0 everywhere",
    "closed loop: feed the previous output, update the state, then read the new output",
    "MC: one multi-output ridge fit over the common training window after a washout of k_max steps; mu = 1e-8",
    "MC: a failed fit (singular system or divergence) scores MC = 0 and is reported, never aborting a sweep",
    "MC: ortho_esn defaults to rho = 1",
    "MC sweep: a fresh reservoir per (mix, seed) pair; the mix grid always contains 1",
    "tradeoff: nu axis is the natural logarithm; one drive per trial scores every (tau, nu) cell; washout 100, mu = 1e-8",
    "MSO8: signal centered over t = 1..6283 and divided by max|centered| * (1 + 1e-6)",
    "MSO8: teacher forcing with Gaussian noise (std 1e-4) inside the activation, rho and omega kept; mu = 0; washout 100",
    "MSO8: the readout maps x[t] to y[t+1]; autonomous step s is compared with y[train_len + s + 1]",
    "search: NaN scores count as inf; failed trials are recorded and never abort; best = lowest finite score, ties to the lowest trial",
    "search: a trial scores the worst NRMSE over the evaluation windows",
    "bounds use the empirical gamma (max activation derivative along the trajectory); gamma = 1 bounds are reported too",
    "MLLE: singular values sorted descending per step; index-wise maximum of the time averages",
    "eigenvalues: Hessenberg reduction with shifted QR iteration",
];

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

pub struct MetaWriter {
    started: f64,
}

impl MetaWriter {
    pub fn start() -> Self {
        Self { started: unix_now() }
    }

    pub fn write(&self, spec: &ExperimentSpec, status: &str, outcome: Option<&Outcome>, error: Option<&str>) -> anyhow::Result<()> {
        let finished = unix_now();
        let value = json!({
            "tool": "es2n",
            "version": env!("CARGO_PKG_VERSION"),
            "experiment": spec.experiment,
            "status": status,
            "error": error,
            "summary": outcome.map(|o| o.summary.as_str()),
            "total_trials": outcome.map(|o| o.total_trials),
            "failed_trials": outcome.map(|o| o.failed_trials),
            "seeds": {
                "master": spec.seed,
                "derivation": outcome.map(|o| o.seed_derivation),
                "trials": outcome.map(|o| &o.trial_seeds),
            },
            "rng_algorithm": RNG_ALGORITHM,
            "tolerances": spec.tolerances,
            "decisions": DECISIONS,
            "spec": spec,
            "files": outcome.map(|o| &o.files),
            "results": outcome.map_or(Value::Null, |o| o.results.clone()),
            "started_unix": self.started,
            "finished_unix": (status != "running").then_some(finished),
        });
        let path = spec.out.join("meta.json");
        let text = serde_json::to_string_pretty(&value)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
