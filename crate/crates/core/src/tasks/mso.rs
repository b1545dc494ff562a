//! MSO8 autoregression: learn the one-step map of a sum of eight sines under
//! teacher forcing, then run the reservoir autonomously on its own output.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::metrics::nrmse;
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, format_real, Matrix, SeededRng};
use crate::readout::Readout;
use crate::reservoir::{Reservoir, ReservoirConfig};

pub const MSO8_FREQUENCIES: [f64; 8] = [0.2, 0.311, 0.42, 0.51, 0.63, 0.74, 0.85, 0.97];

/// Almost-period of the MSO8 signal in steps.
pub const MSO8_PERIOD: usize = 6283;

const NOISE_STREAM: u64 = 0x004e_4f49_5345;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsoSignal {
    /// `values[t - 1]` is `y[t]`.
    pub values: Vec<f64>,
    pub frequencies: [f64; 8],
    pub period: usize,
    /// Mean of the raw sum over the first period.
    pub offset: f64,
    /// Divisor applied after removing `offset`.
    pub scale: f64,
}

impl MsoSignal {
    /// `y[t]`, 1-based.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }
}

fn raw_mso8(t: usize) -> f64 {
    let t = t as f64;
    MSO8_FREQUENCIES.iter().map(|nu| (nu * t).sin()).sum()
}

/// `y[t] = (Σ sin(ν_i t) − offset) / scale` for `t = 1..=length`, where
/// `offset` and `scale` make the first period zero-mean and keep it
/// strictly inside (−1, 1).
pub fn mso8_signal(length: usize) -> MsoSignal {
    let period = MSO8_PERIOD;
    let reference: Vec<f64> = (1..=period).map(raw_mso8).collect();
    let offset = reference.iter().sum::<f64>() / period as f64;
    let peak = reference.iter().map(|v| (v - offset).abs()).fold(0.0, f64::max);
    let scale = peak * (1.0 + 1e-6);
    let values = (1..=length).map(|t| (raw_mso8(t) - offset) / scale).collect();
    MsoSignal {
        values,
        frequencies: MSO8_FREQUENCIES,
        period,
        offset,
        scale,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsoSettings {
    /// Teacher-forced steps; the loop closes after `x[train_len]`.
    pub train_len: usize,
    pub washout: usize,
    /// Std of the pre-activation noise during teacher forcing.
    pub noise_std: f64,
    pub mu: f64,
}

impl Default for MsoSettings {
    fn default() -> Self {
        Self {
            train_len: 6383,
            washout: 100,
            noise_std: 1e-4,
            mu: 0.0,
        }
    }
}

/// Range of autonomous steps, 1-based: `start ..= start + len - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalWindow {
    pub start: usize,
    pub len: usize,
}

impl EvalWindow {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsoRun {
    pub config: ReservoirConfig,
    /// One NRMSE per evaluation window; `inf` when the run diverged first.
    pub nrmse: Vec<f64>,
    /// Autonomous outputs, `outputs[s - 1]` for step `s` (truncated at a
    /// divergence).
    pub outputs: Vec<f64>,
    /// `targets[s - 1]` is the signal value matched with step `s`.
    pub targets: Vec<f64>,
    pub train_len: usize,
    pub diverged_at: Option<usize>,
}

impl MsoRun {
    /// Absolute signal time compared with autonomous step `s`.
    pub fn time_of_step(&self, s: usize) -> usize {
        self.train_len + s + 1
    }

    /// Worst window NRMSE (inf if any window failed).
    pub fn worst(&self) -> f64 {
        self.nrmse.iter().copied().fold(0.0, f64::max)
    }

    /// `t,step,target,output` for the autonomous steps in `windows`
    /// (all steps when empty).
    pub fn write_csv<W: Write>(&self, mut w: W, windows: &[EvalWindow]) -> io::Result<()> {
        writeln!(w, "t,step,target,output")?;
        for s in 1..=self.targets.len() {
            if !windows.is_empty() && !windows.iter().any(|win| (win.start..=win.end()).contains(&s)) {
                continue;
            }
            let out = self.outputs.get(s - 1).copied().unwrap_or(f64::NAN);
            writeln!(
                w,
                "{},{s},{},{}",
                self.time_of_step(s),
                format_real(self.targets[s - 1]),
                format_real(out)
            )?;
        }
        Ok(())
    }
}

/// Teacher-forced training with noise, a noiseless ridge fit of the
/// one-step-ahead target, then autonomous generation scored on `windows`.
///
/// During training `u[t] = y[t]` and the readout maps `x[t]` to `y[t + 1]`.
/// Autonomous step `s` is compared with `y[train_len + s + 1]`.
pub fn mso8_experiment(
    config: &ReservoirConfig,
    settings: &MsoSettings,
    windows: &[EvalWindow],
) -> Result<MsoRun> {
    if config.n_i != 1 || config.n_o != 1 {
        return Err(Error::InvalidArgument("MSO8 needs n_i = n_o = 1".into()));
    }
    if windows.is_empty() || windows.iter().any(|w| w.start == 0 || w.len < 2) {
        return Err(Error::InvalidArgument(
            "evaluation windows must be non-empty, 1-based and at least 2 steps long".into(),
        ));
    }
    if settings.washout >= settings.train_len {
        return Err(Error::InvalidArgument("washout must be smaller than train_len".into()));
    }
    let horizon = windows.iter().map(EvalWindow::end).max().unwrap_or(0);
    let t_train = settings.train_len;
    let signal = mso8_signal(t_train + horizon + 1);

    let config = config.with_noise(settings.noise_std);
    let reservoir = Reservoir::new(config)?;
    let inputs = Matrix::row_vector(&signal.values[..t_train]);
    let mut noise = SeededRng::new(derive_seed(config.seed, NOISE_STREAM));
    let traj = reservoir.drive(&inputs, None, Some(&mut noise))?;
    let targets = Matrix::row_vector(&signal.values[1..=t_train]);
    let readout = Readout::fit(&traj, &targets, settings.mu, settings.washout)?;

    let run = readout.run_closed_loop(&reservoir, &traj.last_state(), horizon)?;
    let outputs = run.outputs.row(0).to_vec();
    let targets: Vec<f64> = (1..=horizon).map(|s| signal.at(t_train + s + 1)).collect();
    let nrmse = windows
        .iter()
        .map(|w| {
            if outputs.len() < w.end() {
                return Ok(f64::INFINITY);
            }
            let range = w.start - 1..w.end();
            let v = nrmse(&targets[range.clone()], &outputs[range])?;
            Ok(if v.is_nan() { f64::INFINITY } else { v })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MsoRun {
        config,
        nrmse,
        outputs,
        targets,
        train_len: t_train,
        diverged_at: run.diverged_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::ModelKind;

    #[test]
    fn normalization() {
        let s = mso8_signal(2 * MSO8_PERIOD);
        let mean = s.values[..MSO8_PERIOD].iter().sum::<f64>() / MSO8_PERIOD as f64;
        assert!(mean.abs() < 1e-9);
        assert!(s.values.iter().all(|v| v.abs() < 1.0));
        let max = s.values[..MSO8_PERIOD].iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(max > 0.999);
        assert_eq!(s.frequencies, MSO8_FREQUENCIES);
        let raw_1 = MSO8_FREQUENCIES.iter().map(|nu| nu.sin()).sum::<f64>();
        assert!((s.at(1) - (raw_1 - s.offset) / s.scale).abs() < 1e-15);
    }

    #[test]
    fn signal_is_almost_periodic() {
        let s = mso8_signal(2 * MSO8_PERIOD);
        let diffs: Vec<f64> = (0..MSO8_PERIOD)
            .map(|i| (s.values[i + MSO8_PERIOD] - s.values[i]).abs())
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        assert!((mean - 0.024).abs() < 0.003, "{mean}");
    }

    #[test]
    fn small_es2n_run_produces_windows() {
        let config = ReservoirConfig::new(ModelKind::Es2n, 40)
            .with_rho(1.0)
            .with_omega(0.11)
            .with_mix(0.03)
            .with_seed(1);
        let settings = MsoSettings {
            train_len: 1500,
            ..MsoSettings::default()
        };
        let windows = [EvalWindow::new(1, 50), EvalWindow::new(200, 50)];
        let run = mso8_experiment(&config, &settings, &windows).unwrap();
        assert_eq!(run.nrmse.len(), 2);
        assert_eq!(run.targets.len(), 249);
        assert!(run.nrmse.iter().all(|v| *v >= 0.0));
        assert_eq!(run, mso8_experiment(&config, &settings, &windows).unwrap());

        let mut csv = Vec::new();
        run.write_csv(&mut csv, &windows[..1]).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 51);
        assert!(text.lines().nth(1).unwrap().starts_with("1502,1,"));
    }

    #[test]
    fn bad_windows_are_rejected() {
        let config = ReservoirConfig::new(ModelKind::Es2n, 10).with_mix(0.1);
        let s = MsoSettings::default();
        assert!(mso8_experiment(&config, &s, &[]).is_err());
        assert!(mso8_experiment(&config, &s, &[EvalWindow::new(0, 10)]).is_err());
    }
}
