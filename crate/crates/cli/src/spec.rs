//! Experiment specification: TOML file + command-line overrides, merged into
//! one fully resolved [`ExperimentSpec`].

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use es2n::tasks::mso::EvalWindow;
use es2n::tasks::search::SearchSpace;
use es2n::tasks::{McSettings, MsoSettings, TradeoffSettings};
use es2n::{ModelKind, ReservoirConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Memory capacity (single point or mix sweep).
    Mc,
    /// Memory/nonlinearity trade-off grid.
    Tradeoff,
    /// MSO8 autonomous generation.
    Mso8,
    /// Jacobian eigenvalues along a driven trajectory.
    Spectrum,
    /// Maximum local Lyapunov exponent.
    Mlle,
    /// Random hyperparameter search on MSO8.
    Search,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Mc => "mc",
            Experiment::Tradeoff => "tradeoff",
            Experiment::Mso8 => "mso8",
            Experiment::Spectrum => "spectrum",
            Experiment::Mlle => "mlle",
            Experiment::Search => "search",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    /// Every input equals `amplitude`.
    Constant,
    /// i.i.d. uniform in `[-amplitude, amplitude]`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_r: usize,
    pub rho: f64,
    pub omega: f64,
    pub mix: f64,
}

impl ModelSpec {
    /// Per-experiment defaults for `kind`.
    pub fn defaults(experiment: Experiment, kind: ModelKind) -> Self {
        let free_mix = |m: f64| if kind.has_mix() { m } else { 1.0 };
        let (rho, omega, mix) = match experiment {
            Experiment::Mc | Experiment::Tradeoff => {
                let rho = if kind == ModelKind::OrthoEsn { 1.0 } else { 0.9 };
                let mix = if kind == ModelKind::Es2n { 0.05 } else { 1.0 };
                (rho, 0.1, mix)
            }
            Experiment::Mso8 | Experiment::Search => match kind {
                ModelKind::LeakyEsn => (0.99, 0.05, 0.9),
                _ => (1.0, 0.11, free_mix(0.03)),
            },
            Experiment::Spectrum => (0.9, 0.1, free_mix(0.1)),
            Experiment::Mlle => (0.9, 0.1, free_mix(0.01)),
        };
        Self { kind, n_r: 100, rho, omega, mix }
    }

    pub fn config(&self, seed: u64) -> ReservoirConfig {
        ReservoirConfig::new(self.kind, self.n_r)
            .with_rho(self.rho)
            .with_omega(self.omega)
            .with_mix(self.mix)
            .with_seed(seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Slack on eigenvalue and Lyapunov bound checks.
    pub bound_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { bound_slack: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McOptions {
    /// Sweep the mix coefficient over a log grid instead of a single point.
    pub sweep: bool,
    pub grid_points: usize,
    pub grid_exponents: Vec<u32>,
    pub length: usize,
    pub train_end: usize,
    /// Also the washout.
    pub k_max: usize,
    pub amplitude: f64,
    pub mu: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        let s = McSettings::default();
        Self {
            sweep: false,
            grid_points: 50,
            grid_exponents: vec![0, 1, 2],
            length: s.length,
            train_end: s.train_end,
            k_max: s.k_max,
            amplitude: s.input_amplitude,
            mu: s.mu,
        }
    }
}

impl McOptions {
    pub fn settings(&self) -> McSettings {
        McSettings {
            length: self.length,
            train_end: self.train_end,
            washout: self.k_max,
            k_max: self.k_max,
            input_amplitude: self.amplitude,
            mu: self.mu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TradeoffOptions {
    pub tau_max: usize,
    /// Natural-log strength axis `log_nu_min, log_nu_min + step, ..., log_nu_max`.
    pub log_nu_min: f64,
    pub log_nu_max: f64,
    pub log_nu_step: f64,
    pub rho: (f64, f64),
    pub omega: (f64, f64),
    pub mix_exponents: Vec<u32>,
    pub mu: f64,
}

impl Default for TradeoffOptions {
    fn default() -> Self {
        let s = TradeoffSettings::default();
        Self {
            tau_max: 20,
            log_nu_min: -1.6,
            log_nu_max: 1.6,
            log_nu_step: 0.1,
            rho: s.rho_range,
            omega: s.omega_range,
            mix_exponents: s.mix_exponents,
            mu: s.mu,
        }
    }
}

impl TradeoffOptions {
    pub fn settings(&self, n_r: usize) -> TradeoffSettings {
        TradeoffSettings {
            n_r,
            mu: self.mu,
            rho_range: self.rho,
            omega_range: self.omega,
            mix_exponents: self.mix_exponents.clone(),
            ..TradeoffSettings::default()
        }
    }

    pub fn axes(&self) -> (Vec<usize>, Vec<f64>) {
        let taus = (1..=self.tau_max).collect();
        let n = ((self.log_nu_max - self.log_nu_min) / self.log_nu_step + 1e-9).floor() as i64;
        let log_nus = (0..=n.max(0))
            .map(|i| {
                let v = self.log_nu_min + i as f64 * self.log_nu_step;
                (v * 1e9).round() / 1e9
            })
            .collect();
        (taus, log_nus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsoOptions {
    pub train_len: usize,
    pub washout: usize,
    pub noise_std: f64,
    /// `[start, len]` pairs of autonomous steps, 1-based.
    pub windows: Vec<(usize, usize)>,
}

impl Default for MsoOptions {
    fn default() -> Self {
        let s = MsoSettings::default();
        Self {
            train_len: s.train_len,
            washout: s.washout,
            noise_std: s.noise_std,
            windows: vec![(1, 300)],
        }
    }
}

impl MsoOptions {
    pub fn settings(&self) -> MsoSettings {
        MsoSettings {
            train_len: self.train_len,
            washout: self.washout,
            noise_std: self.noise_std,
            ..MsoSettings::default()
        }
    }

    pub fn eval_windows(&self) -> Vec<EvalWindow> {
        self.windows.iter().map(|&(s, l)| EvalWindow::new(s, l)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveOptions {
    pub steps: usize,
    pub input: InputKind,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRanges {
    pub rho: (f64, f64),
    pub omega: (f64, f64),
    pub mix: (f64, f64),
}

/// Fully resolved specification; echoed into `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub model: ModelSpec,
    pub seed: u64,
    pub trials: usize,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub resume: bool,
    pub tolerances: Tolerances,
    pub mc: McOptions,
    pub tradeoff: TradeoffOptions,
    pub mso8: MsoOptions,
    pub drive: DriveOptions,
    pub search: SearchRanges,
}

impl ExperimentSpec {
    pub fn search_space(&self) -> SearchSpace {
        SearchSpace {
            base: ReservoirConfig::new(self.model.kind, self.model.n_r),
            rho: self.search.rho,
            omega: self.search.omega,
            mix: self.search.mix,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub kind: Option<ModelKind>,
    pub n_r: Option<usize>,
    pub rho: Option<f64>,
    pub omega: Option<f64>,
    pub mix: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveOverrides {
    pub steps: Option<usize>,
    pub input: Option<InputKind>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOverrides {
    pub rho: Option<(f64, f64)>,
    pub omega: Option<(f64, f64)>,
    pub mix: Option<(f64, f64)>,
}

/// Layout of a spec file. Every key is optional; unknown keys are errors.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecFile {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub resume: Option<bool>,
    pub model: ModelOverrides,
    pub tolerances: Tolerances,
    pub mc: McOptions,
    pub tradeoff: TradeoffOptions,
    pub mso8: MsoOptions,
    pub drive: DriveOverrides,
    pub search: SearchOverrides,
}

impl SpecFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fills every unset field with the defaults of the chosen experiment.
    /// `None` when no experiment was named.
    pub fn resolve(self) -> Option<ExperimentSpec> {
        let experiment = self.experiment?;
        let kind = self.model.kind.unwrap_or(ModelKind::Es2n);
        let d = ModelSpec::defaults(experiment, kind);
        let model = ModelSpec {
            kind,
            n_r: self.model.n_r.unwrap_or(d.n_r),
            rho: self.model.rho.unwrap_or(d.rho),
            omega: self.model.omega.unwrap_or(d.omega),
            mix: self.model.mix.unwrap_or(d.mix),
        };
        let trials = self.trials.unwrap_or(match experiment {
            Experiment::Mc => 10,
            Experiment::Tradeoff => 100,
            Experiment::Search => 200,
            Experiment::Mso8 | Experiment::Spectrum | Experiment::Mlle => 1,
        });
        let (steps, input, amplitude) = match experiment {
            Experiment::Mlle => (1000, InputKind::Uniform, 0.8),
            _ => (50, InputKind::Constant, 1.0),
        };
        let drive = DriveOptions {
            steps: self.drive.steps.unwrap_or(steps),
            input: self.drive.input.unwrap_or(input),
            amplitude: self.drive.amplitude.unwrap_or(amplitude),
        };
        let space = SearchSpace::mso_default(kind, model.n_r);
        let search = SearchRanges {
            rho: self.search.rho.unwrap_or(space.rho),
            omega: self.search.omega.unwrap_or(space.omega),
            mix: self.search.mix.unwrap_or(space.mix),
        };
        Some(ExperimentSpec {
            experiment,
            model,
            seed: self.seed.unwrap_or(1),
            trials,
            out: self.out.unwrap_or_else(|| PathBuf::from("results").join(experiment.name())),
            threads: self.threads,
            resume: self.resume.unwrap_or(false),
            tolerances: self.tolerances,
            mc: self.mc,
            tradeoff: self.tradeoff,
            mso8: self.mso8,
            drive,
            search,
        })
    }
}

fn range_ok((lo, hi): (f64, f64)) -> bool {
    lo.is_finite() && hi.is_finite() && lo <= hi
}

/// Problems with `spec`, each prefixed by the offending field. Empty when
/// the spec can run.
pub fn validate(spec: &ExperimentSpec) -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |field: &str, msg: String| out.push(format!("{field}: {msg}"));

    let uses_model_point = !matches!(spec.experiment, Experiment::Tradeoff | Experiment::Search);
    let config = spec.model.config(spec.seed);
    for d in config.diagnostics() {
        let field = d.split_whitespace().next().unwrap_or("model");
        let searched = matches!(field, "rho" | "omega" | "mix");
        if uses_model_point || !searched {
            push(&format!("model.{field}"), d);
        }
    }
    if spec.trials == 0 {
        push("trials", "must be >= 1".into());
    }
    if spec.threads == Some(0) {
        push("threads", "must be >= 1".into());
    }
    if !(spec.tolerances.bound_slack >= 0.0 && spec.tolerances.bound_slack.is_finite()) {
        push("tolerances.bound_slack", "must be finite and >= 0".into());
    }

    match spec.experiment {
        Experiment::Mc => {
            if let Err(e) = spec.mc.settings().validate() {
                push("mc", e.to_string());
            }
            if !(spec.mc.amplitude.is_finite() && spec.mc.amplitude > 0.0) {
                push("mc.amplitude", "must be finite and > 0".into());
            }
            if !(spec.mc.mu.is_finite() && spec.mc.mu >= 0.0) {
                push("mc.mu", "must be finite and >= 0".into());
            }
            if spec.mc.sweep && spec.mc.grid_points == 0 {
                push("mc.grid_points", "must be >= 1".into());
            }
            if spec.mc.sweep && spec.mc.grid_exponents.is_empty() {
                push("mc.grid_exponents", "must not be empty".into());
            }
        }
        Experiment::Tradeoff => {
            let t = &spec.tradeoff;
            let washout = TradeoffSettings::default().washout;
            if t.tau_max == 0 || t.tau_max > washout {
                push("tradeoff.tau_max", format!("must be in 1..={washout}"));
            }
            if !(t.log_nu_step > 0.0 && t.log_nu_step.is_finite()) || !range_ok((t.log_nu_min, t.log_nu_max)) {
                push("tradeoff.log_nu_*", "need log_nu_min <= log_nu_max and log_nu_step > 0".into());
            }
            if !range_ok(t.rho) || t.rho.0 < 0.0 {
                push("tradeoff.rho", "must be a range [lo, hi] with 0 <= lo <= hi".into());
            }
            if !range_ok(t.omega) || t.omega.0 < 0.0 {
                push("tradeoff.omega", "must be a range [lo, hi] with 0 <= lo <= hi".into());
            }
            if t.mix_exponents.is_empty() {
                push("tradeoff.mix_exponents", "must not be empty".into());
            }
            if !(t.mu.is_finite() && t.mu >= 0.0) {
                push("tradeoff.mu", "must be finite and >= 0".into());
            }
        }
        Experiment::Mso8 | Experiment::Search => {
            let m = &spec.mso8;
            if m.windows.is_empty() {
                push("mso8.windows", "must not be empty".into());
            }
            for &(start, len) in &m.windows {
                if start == 0 || len < 2 {
                    push("mso8.windows", format!("window [{start}, {len}] needs start >= 1 and len >= 2"));
                }
            }
            if m.washout >= m.train_len {
                push("mso8.washout", "must be smaller than mso8.train_len".into());
            }
            if !(m.noise_std.is_finite() && m.noise_std >= 0.0) {
                push("mso8.noise_std", "must be finite and >= 0".into());
            }
            if spec.experiment == Experiment::Search {
                if let Err(e) = spec.search_space().validate() {
                    push("search", e.to_string());
                }
                if spec.search.rho.0 < 0.0 || spec.search.omega.0 < 0.0 {
                    push("search", "rho and omega ranges must be >= 0".into());
                }
            }
        }
        Experiment::Spectrum | Experiment::Mlle => {
            if spec.drive.steps == 0 {
                push("drive.steps", "must be >= 1".into());
            }
            if !spec.drive.amplitude.is_finite() {
                push("drive.amplitude", "must be finite".into());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolved(text: &str) -> ExperimentSpec {
        SpecFile::parse(text).unwrap().resolve().unwrap()
    }

    #[test]
    fn defaults_are_valid_for_every_experiment() {
        for e in Experiment::value_variants() {
            let spec = resolved(&format!("experiment = \"{e}\""));
            assert!(validate(&spec).is_empty(), "{e}: {:?}", validate(&spec));
        }
    }

    #[test]
    fn mc_defaults() {
        let spec = resolved("experiment = \"mc\"");
        assert_eq!(spec.model, ModelSpec { kind: ModelKind::Es2n, n_r: 100, rho: 0.9, omega: 0.1, mix: 0.05 });
        assert_eq!(spec.trials, 10);
        assert_eq!(spec.mc.settings(), McSettings::default());
    }

    #[test]
    fn zero_mix_is_reported() {
        let spec = resolved("experiment = \"mc\"\n[model]\nmix = 0.0");
        let diags = validate(&spec);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].starts_with("model.mix: mix must be in (0,1]"), "{diags:?}");
    }

    #[test]
    fn zero_reservoir_size_is_reported() {
        let spec = resolved("experiment = \"spectrum\"\n[model]\nn_r = 0");
        assert!(validate(&spec).iter().any(|d| d.starts_with("model.n_r")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(SpecFile::parse("experiment = \"mc\"\nsneed = 3").is_err());
        assert!(SpecFile::parse("[model]\nrho = 1.0\nbeta = 0.1").is_err());
        assert!(SpecFile::parse("[mc]\nwashout = 3").is_err());
        let err = SpecFile::parse("experiment = \"fig7\"").unwrap_err().to_string();
        assert!(err.contains("mso8"), "{err}");
    }

    #[test]
    fn searched_fields_are_not_checked_for_search_experiments() {
        let spec = resolved("experiment = \"search\"\n[model]\nkind = \"linear_esn\"");
        assert!(validate(&spec).is_empty(), "{:?}", validate(&spec));
        let bad = resolved("experiment = \"search\"\n[search]\nmix = [0.0, 0.5]");
        assert!(!validate(&bad).is_empty());
    }

    #[test]
    fn tradeoff_axes_hit_grid_values() {
        let (taus, nus) = TradeoffOptions::default().axes();
        assert_eq!(taus.len(), 20);
        assert_eq!(nus.len(), 33);
        assert_eq!(nus[0], -1.6);
        assert_eq!(nus[16], 0.0);
        assert_eq!(nus[32], 1.6);
        assert_eq!((taus, nus), es2n::tasks::tradeoff::default_axes());
    }

    #[test]
    fn leaky_mso_defaults_use_its_own_optimum() {
        let spec = resolved("experiment = \"mso8\"\n[model]\nkind = \"leaky\"");
        assert_eq!((spec.model.rho, spec.model.omega, spec.model.mix), (0.99, 0.05, 0.9));
    }
}
