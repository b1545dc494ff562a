//! The five reservoir models and their state-update maps.
//!
//! Every model shares the pre-activation `a = ρ W_r x + ω W_in u (+ η)` and
//! differs in how it turns `a` into the next state:
//!
//! | kind        | update                               | W_r                   |
//! |-------------|--------------------------------------|-----------------------|
//! | `Es2n`      | `β tanh(a) + (1 − β) O x`            | Gaussian, std 1/√N_r  |
//! | `LeakyEsn`  | `α tanh(a) + (1 − α) x`              | Gaussian, std 1/√N_r  |
//! | `LinearEsn` | `a`                                  | Gaussian, std 1/√N_r  |
//! | `OrthoEsn`  | `tanh(a)`                            | random orthogonal     |
//! | `LinearScr` | `a`                                  | cyclic shift          |
//!
//! `O` is a random orthogonal matrix (ES2N only). The noise term `η` is only
//! present when a noise stream is passed to [`Reservoir::step`].

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    format_real, gaussian_matrix, random_orthogonal, uniform_matrix, Matrix, SeededRng,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Es2n,
    #[serde(alias = "leaky", alias = "esn")]
    LeakyEsn,
    LinearEsn,
    OrthoEsn,
    #[serde(alias = "scr")]
    LinearScr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Es2n,
        ModelKind::LeakyEsn,
        ModelKind::LinearEsn,
        ModelKind::OrthoEsn,
        ModelKind::LinearScr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Es2n => "es2n",
            ModelKind::LeakyEsn => "leaky_esn",
            ModelKind::LinearEsn => "linear_esn",
            ModelKind::OrthoEsn => "ortho_esn",
            ModelKind::LinearScr => "linear_scr",
        }
    }

    /// Identity activation (`LinearEsn`, `LinearScr`) versus tanh.
    pub fn is_linear(self) -> bool {
        matches!(self, ModelKind::LinearEsn | ModelKind::LinearScr)
    }

    /// Whether the mixing coefficient is a free hyperparameter.
    pub fn has_mix(self) -> bool {
        matches!(self, ModelKind::Es2n | ModelKind::LeakyEsn)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace(['-', ' '], "_");
        let kind = match norm.as_str() {
            "es2n" => ModelKind::Es2n,
            "leaky_esn" | "leakyesn" | "leaky" | "esn" => ModelKind::LeakyEsn,
            "linear_esn" | "linearesn" => ModelKind::LinearEsn,
            "ortho_esn" | "orthoesn" => ModelKind::OrthoEsn,
            "linear_scr" | "linearscr" | "scr" => ModelKind::LinearScr,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown model kind {s:?}; expected one of es2n, leaky_esn, linear_esn, ortho_esn, linear_scr"
                )))
            }
        };
        Ok(kind)
    }
}

/// Hyperparameters of one reservoir instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub kind: ModelKind,
    /// Reservoir size N_r.
    pub n_r: usize,
    /// Input dimension N_i.
    pub n_i: usize,
    /// Output dimension N_o.
    pub n_o: usize,
    /// Recurrent scaling ρ.
    pub rho: f64,
    /// Input scaling ω.
    pub omega: f64,
    /// α for the leaky ESN, β (proximity) for ES2N, 1 for the other kinds.
    pub mix: f64,
    pub seed: u64,
    /// Std of the pre-activation noise used when a noise stream is supplied.
    pub noise_std: f64,
}

impl ReservoirConfig {
    /// Scalar-input, scalar-output reservoir with ρ = 0.9, ω = 0.1, mix = 1.
    pub fn new(kind: ModelKind, n_r: usize) -> Self {
        Self {
            kind,
            n_r,
            n_i: 1,
            n_o: 1,
            rho: 0.9,
            omega: 0.1,
            mix: 1.0,
            seed: 0,
            noise_std: 0.0,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_mix(mut self, mix: f64) -> Self {
        self.mix = mix;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_io(mut self, n_i: usize, n_o: usize) -> Self {
        self.n_i = n_i;
        self.n_o = n_o;
        self
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    /// Human-readable problems with this configuration; empty when valid.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_r == 0 {
            out.push("n_r must be >= 1".to_string());
        }
        if self.n_i == 0 {
            out.push("n_i must be >= 1".to_string());
        }
        if self.n_o == 0 {
            out.push("n_o must be >= 1".to_string());
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            out.push(format!("rho must be finite and >= 0, got {}", self.rho));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            out.push(format!("omega must be finite and >= 0, got {}", self.omega));
        }
        if !(self.mix > 0.0 && self.mix <= 1.0) {
            out.push(format!("mix must be in (0,1], got {}", self.mix));
        } else if !self.kind.has_mix() && self.mix != 1.0 {
            out.push(format!("mix must be 1 for {}, got {}", self.kind, self.mix));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            out.push(format!("noise_std must be finite and >= 0, got {}", self.noise_std));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let diags = self.diagnostics();
        if diags.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(diags.join("; ")))
        }
    }
}

/// Realized weights of a reservoir.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirParams {
    /// Recurrent matrix W_r (N_r x N_r), before the ρ scaling.
    pub w_r: Matrix,
    /// Input matrix W_in (N_r x N_i), before the ω scaling.
    pub w_in: Matrix,
    /// Orthogonal map O of ES2N; identity for every other kind.
    pub ortho: Matrix,
}

impl ReservoirParams {
    /// Draws the weights from `config.seed`: W_in first, then W_r, then O.
    pub fn init(config: &ReservoirConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_r;
        let mut rng = SeededRng::new(config.seed);

        let w_in = uniform_matrix(&mut rng, n, config.n_i, -1.0, 1.0);
        let w_r = match config.kind {
            ModelKind::Es2n | ModelKind::LeakyEsn | ModelKind::LinearEsn => {
                gaussian_matrix(&mut rng, n, n, 0.0, 1.0 / (n as f64).sqrt())
            }
            ModelKind::OrthoEsn => random_orthogonal(&mut rng, n),
            ModelKind::LinearScr => cyclic_shift(n),
        };
        let ortho = match config.kind {
            ModelKind::Es2n => random_orthogonal(&mut rng, n),
            _ => Matrix::identity(n),
        };
        Ok(Self { w_r, w_in, ortho })
    }
}

/// Ones on the lower sub-diagonal and in the upper-right corner.
pub fn cyclic_shift(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m[(0, n - 1)] = 1.0;
    m
}

/// Driven states paired with their inputs.
///
/// `states` is `N_r x (T + 1)` with column 0 holding `x[0]`; `inputs` is
/// `N_i x T` with column `t - 1` holding `u[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Matrix,
    pub inputs: Matrix,
}

impl Trajectory {
    /// Number of driven steps T.
    pub fn len(&self) -> usize {
        self.inputs.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `x[t]` for `t` in `0..=T`.
    pub fn state(&self, t: usize) -> Vec<f64> {
        self.states.column(t)
    }

    /// `u[t]` for `t` in `1..=T`.
    pub fn input(&self, t: usize) -> Vec<f64> {
        assert!(t >= 1, "inputs are indexed from t = 1");
        self.inputs.column(t - 1)
    }

    /// Final state `x[T]`.
    pub fn last_state(&self) -> Vec<f64> {
        self.states.column(self.states.cols() - 1)
    }

    /// Time-major CSV: `t,u_0..,x_0..`; the `t = 0` row has empty inputs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n_i = self.inputs.rows();
        let n_r = self.states.rows();
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((0..n_i).map(|i| format!("u{i}")))
            .chain((0..n_r).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for t in 0..self.states.cols() {
            let mut fields = vec![t.to_string()];
            for i in 0..n_i {
                fields.push(if t == 0 {
                    String::new()
                } else {
                    format_real(self.inputs[(i, t - 1)])
                });
            }
            for i in 0..n_r {
                fields.push(format_real(self.states[(i, t)]));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// A configured reservoir with its realized weights.
#[derive(Debug, Clone)]
pub struct Reservoir {
    config: ReservoirConfig,
    params: ReservoirParams,
    scaled_w_r: Matrix,
    scaled_w_in: Matrix,
}

impl Reservoir {
    pub fn new(config: ReservoirConfig) -> Result<Self> {
        let params = ReservoirParams::init(&config)?;
        Self::from_parts(config, params)
    }

    /// Wraps explicitly provided weights (shapes are checked).
    pub fn from_parts(config: ReservoirConfig, params: ReservoirParams) -> Result<Self> {
        config.validate()?;
        let n = config.n_r;
        if params.w_r.shape() != (n, n) {
            return Err(Error::dims("W_r", format!("({n}, {n})"), format!("{:?}", params.w_r.shape())));
        }
        if params.w_in.shape() != (n, config.n_i) {
            return Err(Error::dims(
                "W_in",
                format!("({n}, {})", config.n_i),
                format!("{:?}", params.w_in.shape()),
            ));
        }
        if params.ortho.shape() != (n, n) {
            return Err(Error::dims("O", format!("({n}, {n})"), format!("{:?}", params.ortho.shape())));
        }
        let scaled_w_r = params.w_r.scaled(config.rho);
        let scaled_w_in = params.w_in.scaled(config.omega);
        Ok(Self {
            config,
            params,
            scaled_w_r,
            scaled_w_in,
        })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    pub fn params(&self) -> &ReservoirParams {
        &self.params
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn n_r(&self) -> usize {
        self.config.n_r
    }

    /// The effective recurrent matrix ρ W_r.
    pub fn scaled_recurrent(&self) -> &Matrix {
        &self.scaled_w_r
    }

    fn check_dims(&self, x: &[f64], u: &[f64]) -> Result<()> {
        if x.len() != self.config.n_r {
            return Err(Error::dims("reservoir state", self.config.n_r, x.len()));
        }
        if u.len() != self.config.n_i {
            return Err(Error::dims("reservoir input", self.config.n_i, u.len()));
        }
        Ok(())
    }

    /// `ρ W_r x + ω W_in u`.
    pub fn pre_activation(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, u)?;
        let mut a = vec![0.0; self.config.n_r];
        self.pre_activation_into(x, u, &mut a);
        Ok(a)
    }

    fn pre_activation_into(&self, x: &[f64], u: &[f64], a: &mut [f64]) {
        self.scaled_w_r.mul_vec_into(x, a);
        for (i, ai) in a.iter_mut().enumerate() {
            let row = self.scaled_w_in.row(i);
            for (w, ui) in row.iter().zip(u) {
                *ai += w * ui;
            }
        }
    }

    /// One state update. When `noise` is given and `noise_std > 0`, N_r
    /// Gaussian draws are added to the pre-activation.
    pub fn step(&self, x: &[f64], u: &[f64], noise: Option<&mut SeededRng>) -> Result<Vec<f64>> {
        self.check_dims(x, u)?;
        let mut scratch = StepScratch::new(self.config.n_r);
        let mut out = vec![0.0; self.config.n_r];
        self.step_into(x, u, noise, &mut out, &mut scratch);
        Ok(out)
    }

    fn step_into(
        &self,
        x: &[f64],
        u: &[f64],
        noise: Option<&mut SeededRng>,
        out: &mut [f64],
        scratch: &mut StepScratch,
    ) {
        let a = &mut scratch.pre;
        self.pre_activation_into(x, u, a);
        if let Some(rng) = noise {
            if self.config.noise_std > 0.0 {
                let std = self.config.noise_std;
                for ai in a.iter_mut() {
                    *ai += std * rng.standard_normal();
                }
            }
        }
        let mix = self.config.mix;
        match self.config.kind {
            ModelKind::Es2n => {
                self.params.ortho.mul_vec_into(x, &mut scratch.mixed);
                for ((o, ai), ox) in out.iter_mut().zip(a.iter()).zip(&scratch.mixed) {
                    *o = mix * ai.tanh() + (1.0 - mix) * ox;
                }
            }
            ModelKind::LeakyEsn => {
                for ((o, ai), xi) in out.iter_mut().zip(a.iter()).zip(x) {
                    *o = mix * ai.tanh() + (1.0 - mix) * xi;
                }
            }
            ModelKind::OrthoEsn => {
                for (o, ai) in out.iter_mut().zip(a.iter()) {
                    *o = ai.tanh();
                }
            }
            ModelKind::LinearEsn | ModelKind::LinearScr => out.copy_from_slice(a),
        }
    }

    /// Iterates [`Reservoir::step`] over the columns of `inputs` starting
    /// from `x0` (the origin when `None`).
    pub fn drive(
        &self,
        inputs: &Matrix,
        x0: Option<&[f64]>,
        mut noise: Option<&mut SeededRng>,
    ) -> Result<Trajectory> {
        let n = self.config.n_r;
        if inputs.rows() != self.config.n_i {
            return Err(Error::dims("drive inputs (rows)", self.config.n_i, inputs.rows()));
        }
        let steps = inputs.cols();
        let mut x = match x0 {
            Some(x0) if x0.len() != n => return Err(Error::dims("initial state", n, x0.len())),
            Some(x0) => x0.to_vec(),
            None => vec![0.0; n],
        };
        let mut states = Matrix::zeros(n, steps + 1);
        states.set_column(0, &x);
        let mut next = vec![0.0; n];
        let mut u = vec![0.0; self.config.n_i];
        let mut scratch = StepScratch::new(n);
        for t in 1..=steps {
            for (i, ui) in u.iter_mut().enumerate() {
                *ui = inputs[(i, t - 1)];
            }
            self.step_into(&x, &u, noise.as_deref_mut(), &mut next, &mut scratch);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { step: t });
            }
            std::mem::swap(&mut x, &mut next);
            states.set_column(t, &x);
        }
        Ok(Trajectory {
            states,
            inputs: inputs.clone(),
        })
    }

    /// Diagonal of D = diag(φ'(a)) at the pre-activation for `(u, x)`;
    /// all ones for the linear kinds.
    pub fn derivative_diag(&self, u: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let a = self.pre_activation(x, u)?;
        Ok(self.derivative_from_pre(&a))
    }

    pub(crate) fn derivative_from_pre(&self, a: &[f64]) -> Vec<f64> {
        if self.config.kind.is_linear() {
            vec![1.0; a.len()]
        } else {
            a.iter()
                .map(|v| {
                    let t = v.tanh();
                    1.0 - t * t
                })
                .collect()
        }
    }

    /// Jacobian ∂G/∂x of the update map at `(u, x)`, where `u` is the input
    /// of the step that leaves `x`.
    pub fn jacobian(&self, u: &[f64], x: &[f64]) -> Result<Matrix> {
        let d = self.derivative_diag(u, x)?;
        Ok(self.jacobian_from_derivative(&d))
    }

    pub(crate) fn jacobian_from_derivative(&self, d: &[f64]) -> Matrix {
        let n = self.config.n_r;
        let mix = self.config.mix;
        let mut j = self.scaled_w_r.clone();
        match self.config.kind {
            ModelKind::LinearEsn | ModelKind::LinearScr => {}
            ModelKind::OrthoEsn => scale_rows(&mut j, d, 1.0),
            ModelKind::LeakyEsn => {
                scale_rows(&mut j, d, mix);
                for i in 0..n {
                    j[(i, i)] += 1.0 - mix;
                }
            }
            ModelKind::Es2n => {
                scale_rows(&mut j, d, mix);
                let w = 1.0 - mix;
                for (ji, oi) in j.as_mut_slice().iter_mut().zip(self.params.ortho.as_slice()) {
                    *ji += w * oi;
                }
            }
        }
        j
    }
}

fn scale_rows(m: &mut Matrix, d: &[f64], factor: f64) {
    for (i, di) in d.iter().enumerate() {
        let s = factor * di;
        m.row_mut(i).iter_mut().for_each(|v| *v *= s);
    }
}

struct StepScratch {
    pre: Vec<f64>,
    mixed: Vec<f64>,
}

impl StepScratch {
    fn new(n: usize) -> Self {
        Self {
            pre: vec![0.0; n],
            mixed: vec![0.0; n],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{spectral_radius, SeededRng};

    fn hand_es2n() -> Reservoir {
        let config = ReservoirConfig::new(ModelKind::Es2n, 2)
            .with_rho(1.0)
            .with_omega(1.0)
            .with_mix(0.5);
        let params = ReservoirParams {
            w_r: Matrix::identity(2),
            w_in: Matrix::from_rows(&[[1.0], [0.0]]).unwrap(),
            ortho: Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap(),
        };
        Reservoir::from_parts(config, params).unwrap()
    }

    #[test]
    fn hand_computed_es2n_step() {
        let r = hand_es2n();
        let x = r.step(&[0.1, 0.2], &[0.3], None).unwrap();
        let expected = [0.5 * 0.4_f64.tanh() + 0.5 * 0.2, 0.5 * 0.2_f64.tanh() + 0.5 * 0.1];
        assert!((x[0] - expected[0]).abs() < 1e-16);
        assert!((x[1] - expected[1]).abs() < 1e-16);
    }

    #[test]
    fn origin_is_a_fixed_point_without_input() {
        for kind in ModelKind::ALL {
            let mix = if kind.has_mix() { 0.3 } else { 1.0 };
            let r = Reservoir::new(ReservoirConfig::new(kind, 6).with_mix(mix).with_seed(5)).unwrap();
            let x = r.step(&[0.0; 6], &[0.0], None).unwrap();
            assert!(x.iter().all(|&v| v == 0.0), "{kind}");
        }
    }

    #[test]
    fn es2n_and_leaky_coincide_at_mix_one() {
        let base = ReservoirConfig::new(ModelKind::Es2n, 20).with_seed(9).with_rho(1.3).with_omega(0.7);
        let es2n = Reservoir::new(base).unwrap();
        let leaky = Reservoir::new(ReservoirConfig { kind: ModelKind::LeakyEsn, ..base }).unwrap();
        assert_eq!(es2n.params().w_r, leaky.params().w_r);
        assert_eq!(es2n.params().w_in, leaky.params().w_in);
        let mut rng = SeededRng::new(3);
        let x = rng.uniform_vec(20, -1.0, 1.0);
        let u = [0.42];
        let a = es2n.step(&x, &u, None).unwrap();
        let b = leaky.step(&x, &u, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scr_weights_form_a_cycle() {
        let r = Reservoir::new(ReservoirConfig::new(ModelKind::LinearScr, 3)).unwrap();
        let expected = Matrix::from_rows(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(r.params().w_r, expected);
        let big = cyclic_shift(50);
        assert_eq!(big.as_slice().iter().filter(|&&v| v != 0.0).count(), 50);
        assert!(big.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn scr_cycles_basis_vectors_with_period_n() {
        let n = 5;
        let r = Reservoir::new(ReservoirConfig::new(ModelKind::LinearScr, n).with_rho(1.0)).unwrap();
        let mut x0 = vec![0.0; n];
        x0[0] = 1.0;
        let traj = r.drive(&Matrix::zeros(1, 2 * n), Some(&x0), None).unwrap();
        for t in 0..=2 * n {
            let x = traj.state(t);
            let hot = x.iter().position(|&v| v == 1.0).unwrap();
            assert_eq!(hot, t % n);
            assert_eq!(x.iter().filter(|&&v| v != 0.0).count(), 1);
        }
        assert_eq!(traj.state(n), x0);
    }

    #[test]
    fn es2n_orthogonal_map_is_orthogonal() {
        let r = Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 100).with_mix(0.1).with_seed(2)).unwrap();
        let o = &r.params().ortho;
        let defect = o.matmul(&o.transpose()).unwrap().sub(&Matrix::identity(100)).unwrap().max_abs();
        assert!(defect < 1e-12);
    }

    #[test]
    fn ortho_esn_recurrent_matrix_is_orthogonal() {
        let r = Reservoir::new(ReservoirConfig::new(ModelKind::OrthoEsn, 40).with_seed(8)).unwrap();
        let w = &r.params().w_r;
        let defect = w.matmul(&w.transpose()).unwrap().sub(&Matrix::identity(40)).unwrap().max_abs();
        assert!(defect < 1e-12);
        assert_eq!(r.params().ortho, Matrix::identity(40));
    }

    #[test]
    fn gaussian_recurrent_matrix_has_unit_spectral_radius() {
        for seed in 0..3 {
            let r = Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 500).with_mix(0.5).with_seed(seed)).unwrap();
            let sr = spectral_radius(&r.params().w_r).unwrap();
            assert!((0.9..=1.1).contains(&sr), "seed {seed}: {sr}");
        }
    }

    #[test]
    fn jacobian_at_origin_is_mixed_linear_part() {
        let r = Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 15).with_mix(0.2).with_seed(4)).unwrap();
        let j = r.jacobian(&[0.0], &[0.0; 15]).unwrap();
        let expected = r
            .scaled_recurrent()
            .scaled(0.2)
            .add(&r.params().ortho.scaled(0.8))
            .unwrap();
        assert!(j.sub(&expected).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn linear_jacobian_ignores_state_and_input() {
        let r = Reservoir::new(ReservoirConfig::new(ModelKind::LinearEsn, 8).with_seed(1)).unwrap();
        let j1 = r.jacobian(&[0.3], &[0.5; 8]).unwrap();
        let j2 = r.jacobian(&[-2.0], &[0.0; 8]).unwrap();
        assert_eq!(j1, j2);
        assert_eq!(&j1, r.scaled_recurrent());
    }

    #[test]
    fn drive_single_step_matches_step() {
        let r = Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 10).with_mix(0.4).with_seed(6)).unwrap();
        let x0 = vec![0.05; 10];
        let traj = r.drive(&Matrix::row_vector(&[0.7]), Some(&x0), None).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.state(1), r.step(&x0, &[0.7], None).unwrap());
    }

    #[test]
    fn noisy_drive_is_reproducible() {
        let config = ReservoirConfig::new(ModelKind::Es2n, 12).with_mix(0.1).with_seed(3).with_noise(1e-4);
        let r = Reservoir::new(config).unwrap();
        let u = Matrix::row_vector(&SeededRng::new(1).uniform_vec(50, -1.0, 1.0));
        let a = r.drive(&u, None, Some(&mut SeededRng::new(77))).unwrap();
        let b = r.drive(&u, None, Some(&mut SeededRng::new(77))).unwrap();
        let clean = r.drive(&u, None, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.states, clean.states);
    }

    #[test]
    fn linear_divergence_is_reported() {
        let r = Reservoir::new(ReservoirConfig::new(ModelKind::LinearScr, 4).with_rho(3.0).with_omega(1.0)).unwrap();
        let u = Matrix::from_fn(1, 2000, |_, t| if t % 2 == 0 { 1.0 } else { 0.5 });
        assert!(matches!(r.drive(&u, None, None), Err(Error::Divergence { .. })));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 4).with_mix(0.0)).is_err());
        assert!(Reservoir::new(ReservoirConfig::new(ModelKind::OrthoEsn, 4).with_mix(0.5)).is_err());
        assert!(Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 0)).is_err());
        let r = Reservoir::new(ReservoirConfig::new(ModelKind::Es2n, 4).with_mix(0.5)).unwrap();
        assert!(r.step(&[0.0; 3], &[0.0], None).is_err());
        assert!(r.step(&[0.0; 4], &[0.0, 1.0], None).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("gru".parse::<ModelKind>().is_err());
    }
}
