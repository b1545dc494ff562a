//! Stability analysis along driven trajectories: the ESP sufficient
//! condition, Jacobian eigenspectra with their annulus (ES2N) or disc (leaky
//! ESN) bounds, and the maximum local Lyapunov exponent (MLLE).
//!
//! Notation: `σ = ‖ρ W_r‖₂`, `γ` = largest entry of `D = diag(tanh'(a))`
//! over the steps analysed, `m` = the mixing coefficient (β or α).
//! The Jacobian at step `t` is taken at `(u[t + 1], x[t])`, the arguments of
//! the update that produces `x[t + 1]`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eigenvalues, format_real, singular_values, spectral_norm, ComplexValue};
use crate::reservoir::{ModelKind, Reservoir, ReservoirConfig, Trajectory};

/// Largest singular value of `ρ W_r` and whether it is below 1.
///
/// `false` means the criterion does not guarantee the echo state property,
/// not that the property fails.
pub fn esp_sufficient(reservoir: &Reservoir) -> Result<(bool, f64)> {
    let sigma = sigma_of(reservoir)?;
    Ok((sigma < 1.0, sigma))
}

fn sigma_of(reservoir: &Reservoir) -> Result<f64> {
    if reservoir.config().rho == 0.0 {
        return Ok(0.0);
    }
    spectral_norm(reservoir.scaled_recurrent())
}

fn check_trajectory(reservoir: &Reservoir, trajectory: &Trajectory) -> Result<()> {
    if trajectory.is_empty() {
        return Err(Error::InvalidArgument("trajectory must have at least one step".into()));
    }
    if trajectory.states.rows() != reservoir.n_r() {
        return Err(Error::dims("trajectory states", reservoir.n_r(), trajectory.states.rows()));
    }
    if trajectory.inputs.rows() != reservoir.config().n_i {
        return Err(Error::dims("trajectory inputs", reservoir.config().n_i, trajectory.inputs.rows()));
    }
    Ok(())
}

/// `tanh'` diagonal at each analysed step `t = 0..T`.
fn derivatives(reservoir: &Reservoir, trajectory: &Trajectory) -> Result<Vec<Vec<f64>>> {
    (0..trajectory.len())
        .map(|t| reservoir.derivative_diag(&trajectory.input(t + 1), &trajectory.state(t)))
        .collect()
}

fn max_entry(ds: &[Vec<f64>]) -> f64 {
    ds.iter().flatten().copied().fold(0.0, f64::max)
}

/// Largest activation derivative seen along the trajectory (1 for the
/// linear kinds).
pub fn empirical_gamma(reservoir: &Reservoir, trajectory: &Trajectory) -> Result<f64> {
    check_trajectory(reservoir, trajectory)?;
    Ok(max_entry(&derivatives(reservoir, trajectory)?))
}

/// Region guaranteed to contain every Jacobian eigenvalue.
///
/// ES2N (and the other non-leaky kinds): the annulus
/// `inner ≤ |λ| ≤ outer` around the circle of radius `1 − m`.
/// Leaky ESN: the disc `|λ − (1 − m)| ≤ half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusBounds {
    pub center_radius: f64,
    pub half_width: f64,
    pub inner: f64,
    pub outer: f64,
    pub leaky: bool,
}

impl AnnulusBounds {
    /// Whether `lambda` satisfies the bound, up to `slack`.
    pub fn contains(&self, lambda: ComplexValue, slack: f64) -> bool {
        self.violation(lambda) <= slack
    }

    /// How far `lambda` lies outside the region (0 when inside).
    pub fn violation(&self, lambda: ComplexValue) -> f64 {
        if self.leaky {
            (lambda.dist(ComplexValue::new(self.center_radius, 0.0)) - self.half_width).max(0.0)
        } else {
            let r = lambda.modulus();
            (self.inner - r).max(r - self.outer).max(0.0)
        }
    }
}

pub fn annulus_bounds(config: &ReservoirConfig, gamma: f64, sigma: f64) -> AnnulusBounds {
    let m = config.mix;
    let center_radius = 1.0 - m;
    let half_width = m * gamma * sigma;
    AnnulusBounds {
        center_radius,
        half_width,
        inner: (center_radius - half_width).max(0.0),
        outer: center_radius + half_width,
        leaky: config.kind == ModelKind::LeakyEsn,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// `eigenvalues[t]` holds the spectrum of `J[t]`.
    pub eigenvalues: Vec<Vec<ComplexValue>>,
    pub sigma: f64,
    pub gamma: f64,
    /// Bounds with the empirical γ.
    pub bounds: AnnulusBounds,
    /// Bounds with γ = 1.
    pub conservative_bounds: AnnulusBounds,
}

impl SpectrumReport {
    /// Largest bound violation over all steps and eigenvalues.
    pub fn max_violation(&self) -> f64 {
        self.eigenvalues
            .iter()
            .flatten()
            .map(|&l| self.bounds.violation(l))
            .fold(0.0, f64::max)
    }

    /// CSV with header `re,im,step`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re,im,step")?;
        for (t, spectrum) in self.eigenvalues.iter().enumerate() {
            for l in spectrum {
                writeln!(w, "{},{},{t}", format_real(l.re), format_real(l.im))?;
            }
        }
        Ok(())
    }
}

/// Eigenvalues of `J[t]` for every step of the trajectory.
pub fn spectrum_along(reservoir: &Reservoir, trajectory: &Trajectory) -> Result<SpectrumReport> {
    check_trajectory(reservoir, trajectory)?;
    let sigma = sigma_of(reservoir)?;
    let ds = derivatives(reservoir, trajectory)?;
    let gamma = max_entry(&ds);
    let eigenvalues = ds
        .par_iter()
        .enumerate()
        .map(|(t, d)| eigenvalues(&reservoir.jacobian_from_derivative(d)).map_err(|e| e.at_step(t)))
        .collect::<Result<Vec<_>>>()?;
    let config = reservoir.config();
    Ok(SpectrumReport {
        eigenvalues,
        sigma,
        gamma,
        bounds: annulus_bounds(config, gamma, sigma),
        conservative_bounds: annulus_bounds(config, 1.0, sigma),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    /// Λ: the largest time-averaged log singular value (index-wise).
    pub mlle: f64,
    /// Time average of the log of the largest singular value.
    pub mean_max_log_sv: f64,
    /// `log(1 − m(γσ + 1))`, `-inf` when the argument is not positive.
    pub lower: f64,
    /// `log(1 + m(γσ − 1))`.
    pub upper: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub per_step_max_log_sv: Vec<f64>,
}

impl LyapunovReport {
    pub fn within_bounds(&self, slack: f64) -> bool {
        self.mlle >= self.lower - slack && self.mlle <= self.upper + slack
    }

    /// CSV with header `step,max_log_sv`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "step,max_log_sv")?;
        for (t, v) in self.per_step_max_log_sv.iter().enumerate() {
            writeln!(w, "{t},{}", format_real(*v))?;
        }
        Ok(())
    }
}

/// `(lower, upper)` bounds on Λ for mixing coefficient `mix`.
pub fn mlle_bounds(mix: f64, gamma: f64, sigma: f64) -> (f64, f64) {
    let lo_arg = 1.0 - mix * (gamma * sigma + 1.0);
    let lower = if lo_arg > 0.0 { lo_arg.ln() } else { f64::NEG_INFINITY };
    let upper = (1.0 + mix * (gamma * sigma - 1.0)).ln();
    (lower, upper)
}

/// Maximum local Lyapunov exponent along the trajectory.
pub fn mlle(reservoir: &Reservoir, trajectory: &Trajectory) -> Result<LyapunovReport> {
    check_trajectory(reservoir, trajectory)?;
    let sigma = sigma_of(reservoir)?;
    let ds = derivatives(reservoir, trajectory)?;
    let gamma = max_entry(&ds);
    let n = reservoir.n_r();
    let steps = ds.len();

    let log_svs = ds
        .par_iter()
        .enumerate()
        .map(|(t, d)| {
            let sv = singular_values(&reservoir.jacobian_from_derivative(d)).map_err(|e| e.at_step(t))?;
            if sv.contains(&0.0) {
                return Err(Error::DegenerateJacobian { step: t });
            }
            Ok(sv.into_iter().map(f64::ln).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sums = vec![0.0; n];
    for row in &log_svs {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let mlle = sums
        .iter()
        .map(|s| s / steps as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let per_step_max_log_sv: Vec<f64> = log_svs.iter().map(|r| r[0]).collect();
    let mean_max_log_sv = per_step_max_log_sv.iter().sum::<f64>() / steps as f64;
    let (lower, upper) = mlle_bounds(reservoir.config().mix, gamma, sigma);
    Ok(LyapunovReport {
        mlle,
        mean_max_log_sv,
        lower,
        upper,
        gamma,
        sigma,
        per_step_max_log_sv,
    })
}
