//! Linear readouts trained by ridge regression, and closed-loop generation.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ridge_solve, Matrix};
use crate::reservoir::{Reservoir, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    /// Output weights W_o, `N_o x N_r`.
    pub w_o: Matrix,
    pub mu: f64,
    pub washout: usize,
}

impl Readout {
    /// Fits `W_o` so that `W_o x[t] ≈ targets[:, t - 1]` for `t` in
    /// `washout + 1 ..= T`.
    ///
    /// `targets` has one column per driven step (column `t - 1` is the
    /// desired output for state `x[t]`).
    pub fn fit(trajectory: &Trajectory, targets: &Matrix, mu: f64, washout: usize) -> Result<Self> {
        let steps = trajectory.len();
        if targets.cols() != steps {
            return Err(Error::dims("readout targets (columns)", steps, targets.cols()));
        }
        let states = trajectory.states.columns(1..steps + 1);
        Self::fit_states(&states, targets, mu, washout)
    }

    /// Like [`Readout::fit`] on a bare `N_r x T` state matrix whose columns
    /// are aligned with the columns of `targets`.
    pub fn fit_states(states: &Matrix, targets: &Matrix, mu: f64, washout: usize) -> Result<Self> {
        let steps = states.cols();
        if targets.cols() != steps {
            return Err(Error::dims("readout targets (columns)", steps, targets.cols()));
        }
        if washout >= steps {
            return Err(Error::InvalidArgument(format!(
                "washout ({washout}) must be smaller than the number of steps ({steps})"
            )));
        }
        let x = states.columns(washout..steps);
        let y = targets.columns(washout..steps);
        let w_o = ridge_solve(&x, &y, mu)?;
        if !w_o.is_finite() {
            return Err(Error::Singular {
                rank: 0,
                size: states.rows(),
            });
        }
        Ok(Self { w_o, mu, washout })
    }

    pub fn from_weights(w_o: Matrix) -> Self {
        Self {
            w_o,
            mu: 0.0,
            washout: 0,
        }
    }

    pub fn n_o(&self) -> usize {
        self.w_o.rows()
    }

    pub fn n_r(&self) -> usize {
        self.w_o.cols()
    }

    /// `W_o X` for an `N_r x T` state matrix.
    pub fn predict(&self, states: &Matrix) -> Result<Matrix> {
        self.w_o.matmul(states)
    }

    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_r() {
            return Err(Error::dims("readout state", self.n_r(), x.len()));
        }
        self.w_o.mul_vec(x)
    }

    /// Runs the reservoir autonomously from `x_start`: at each step the
    /// previous output is fed back as input, the state is updated without
    /// noise, and the new output is read. Returns `N_o x steps`.
    pub fn generate_closed_loop(
        &self,
        reservoir: &Reservoir,
        x_start: &[f64],
        steps: usize,
    ) -> Result<Matrix> {
        let run = self.run_closed_loop(reservoir, x_start, steps)?;
        match run.diverged_at {
            Some(step) => Err(Error::Divergence { step }),
            None => Ok(run.outputs),
        }
    }

    /// Same iteration as [`Readout::generate_closed_loop`], but a divergence
    /// ends the run early instead of discarding the outputs produced so far.
    pub fn run_closed_loop(
        &self,
        reservoir: &Reservoir,
        x_start: &[f64],
        steps: usize,
    ) -> Result<ClosedLoopRun> {
        let config = reservoir.config();
        if config.n_i != self.n_o() {
            return Err(Error::dims("closed-loop feedback (N_i vs N_o)", config.n_i, self.n_o()));
        }
        let mut z = self.output(x_start)?;
        let mut x = x_start.to_vec();
        let mut out = Matrix::zeros(self.n_o(), steps);
        for s in 0..steps {
            x = reservoir.step(&x, &z, None)?;
            z = self.w_o.mul_vec(&x)?;
            if z.iter().chain(&x).any(|v| !v.is_finite()) {
                return Ok(ClosedLoopRun {
                    outputs: out.columns(0..s),
                    diverged_at: Some(s + 1),
                });
            }
            out.set_column(s, &z);
        }
        Ok(ClosedLoopRun {
            outputs: out,
            diverged_at: None,
        })
    }

    /// Weights as CSV, one row per output.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        self.w_o.write_csv(w)
    }
}

/// Outputs of an autonomous run; `outputs` holds only the steps completed
/// before a divergence (1-based step index in `diverged_at`).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRun {
    pub outputs: Matrix,
    pub diverged_at: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{uniform_matrix, SeededRng};
    use crate::reservoir::{ModelKind, ReservoirConfig};

    #[test]
    fn identity_states_give_targets() {
        let states = Matrix::identity(5);
        let targets = Matrix::from_fn(2, 5, |i, j| (i as f64 + 1.0) * j as f64);
        let r = Readout::fit_states(&states, &targets, 0.0, 0).unwrap();
        assert!(r.w_o.sub(&targets).unwrap().max_abs() < 1e-14);
        let back = r.predict(&states).unwrap();
        assert!(back.sub(&targets).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn washout_drops_leading_columns() {
        // Corrupt the washout columns; the fit must ignore them.
        let mut rng = SeededRng::new(4);
        let states = uniform_matrix(&mut rng, 3, 40, -1.0, 1.0);
        let m = Matrix::from_rows(&[[0.5, -1.0, 2.0]]).unwrap();
        let mut targets = m.matmul(&states).unwrap();
        for t in 0..10 {
            targets[(0, t)] = 1e6;
        }
        let r = Readout::fit_states(&states, &targets, 0.0, 10).unwrap();
        assert!(r.w_o.sub(&m).unwrap().max_abs() < 1e-10);
        assert!(Readout::fit_states(&states, &targets, 0.0, 40).is_err());
    }

    #[test]
    fn zero_weights_give_zero_closed_loop() {
        let res = Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 6).with_mix(0.5)).unwrap();
        let r = Readout::from_weights(Matrix::zeros(1, 6));
        let out = r.generate_closed_loop(&res, &[0.0; 6], 20).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn closed_loop_first_step_is_unrolled_definition() {
        let res = Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 8).with_mix(0.3).with_seed(2)).unwrap();
        let w = uniform_matrix(&mut SeededRng::new(6), 1, 8, -0.5, 0.5);
        let r = Readout::from_weights(w);
        let x0 = SeededRng::new(7).uniform_vec(8, -0.2, 0.2);
        let out = r.generate_closed_loop(&res, &x0, 3).unwrap();
        let x1 = res.step(&x0, &r.output(&x0).unwrap(), None).unwrap();
        assert_eq!(out[(0, 0)], r.output(&x1).unwrap()[0]);
        let again = r.generate_closed_loop(&res, &x0, 3).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn closed_loop_reports_divergence_step() {
        let res = Reservoir::new(
            ReservoirConfig::new(ModelKind::LinearScr, 2).with_rho(1.0).with_omega(1.0),
        )
        .unwrap();
        let r = Readout::from_weights(Matrix::from_rows(&[[1e3, 1e3]]).unwrap());
        match r.generate_closed_loop(&res, &[1.0, 1.0], 1000) {
            Err(Error::Divergence { step }) => assert!(step > 1 && step < 1000),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn feedback_dimension_is_checked() {
        let res = Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 4).with_mix(0.5)).unwrap();
        let r = Readout::from_weights(Matrix::zeros(2, 4));
        assert!(r.generate_closed_loop(&res, &[0.0; 4], 1).is_err());
    }

    #[test]
    fn fit_aligns_trajectory_states_with_targets() {
        let res = Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 5).with_mix(0.5).with_seed(1)).unwrap();
        let u = Matrix::row_vector(&SeededRng::new(2).uniform_vec(60, -1.0, 1.0));
        let traj = res.drive(&u, None, None).unwrap();
        let m = Matrix::from_rows(&[[1.0, -2.0, 0.5, 0.0, 3.0]]).unwrap();
        let targets = m.matmul(&traj.states.columns(1..61)).unwrap();
        let r = Readout::fit(&traj, &targets, 0.0, 5).unwrap();
        assert!(r.w_o.sub(&m).unwrap().max_abs() < 1e-8);
    }
}
