//! `es2n`: run one experiment and write its CSVs plus `meta.json`.
//!
//! Exit status: 0 when every trial completed, 1 on trial failures, bound
//! violations or I/O errors, 2 for an invalid specification.

mod meta;
mod run;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use es2n::ModelKind;

use crate::run::Status;
use crate::spec::{validate, Experiment, SpecFile};

#[derive(Debug, Parser)]
#[command(name = "es2n", version, about = "Echo state network experiments (ES2N and baselines)")]
struct Args {
    /// Experiment to run; overrides `experiment` in the config file.
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    /// TOML spec file. Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; every trial seed is derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Seeds (mc, mso8, spectrum, mlle) or random trials (tradeoff, search).
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory (default results/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model kind: es2n, leaky_esn, linear_esn, ortho_esn, linear_scr.
    #[arg(long, value_parser = parse_kind)]
    kind: Option<ModelKind>,
    #[arg(long)]
    n_r: Option<usize>,
    /// Ignored by tradeoff and search, which draw rho, omega and mix.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Mixing coefficient (beta for es2n, alpha for leaky_esn).
    #[arg(long)]
    mix: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// search: keep the complete rows of an existing search.csv and continue.
    #[arg(long)]
    resume: bool,
    /// Validate the spec, print it and exit without running.
    #[arg(long)]
    check: bool,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: es2n::Error| e.to_string())
}

impl Args {
    fn apply(&self, file: &mut SpecFile) {
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = Some(v);
                }
            };
        }
        set!(file.experiment, self.experiment);
        set!(file.seed, self.seed);
        set!(file.trials, self.trials);
        set!(file.out, self.out);
        set!(file.threads, self.threads);
        set!(file.model.kind, self.kind);
        set!(file.model.n_r, self.n_r);
        set!(file.model.rho, self.rho);
        set!(file.model.omega, self.omega);
        set!(file.model.mix, self.mix);
        if self.resume {
            file.resume = Some(true);
        }
    }
}

const INVALID: u8 = 2;

fn main() -> ExitCode {
    let args = Args::parse();
    let mut file = match &args.config {
        Some(path) => match SpecFile::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("es2n: invalid spec: {e:#}");
                return ExitCode::from(INVALID);
            }
        },
        None => SpecFile::default(),
    };
    args.apply(&mut file);
    let Some(spec) = file.resolve() else {
        let names: Vec<_> = Experiment::value_variants().iter().map(|e| e.name()).collect();
        eprintln!("es2n: no experiment given; choose one of: {}", names.join(", "));
        return ExitCode::from(INVALID);
    };
    let diags = validate(&spec);
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("es2n: invalid spec: {d}");
        }
        return ExitCode::from(INVALID);
    }
    if args.check {
        match serde_json::to_string_pretty(&spec) {
            Ok(text) => println!("{text}"),
            Err(e) => {
                eprintln!("es2n: {e}");
                return ExitCode::FAILURE;
            }
        }
        return ExitCode::SUCCESS;
    }

    if let Some(n) = spec.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("es2n: cannot start {n} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    if let Err(e) = std::fs::create_dir_all(&spec.out) {
        eprintln!("es2n: cannot create {}: {e}", spec.out.display());
        return ExitCode::FAILURE;
    }

    let meta = meta::MetaWriter::start();
    if let Err(e) = meta.write(&spec, "running", None, None) {
        eprintln!("es2n: {e:#}");
        return ExitCode::FAILURE;
    }
    match run::run(&spec) {
        Ok(outcome) => {
            let status = match outcome.status {
                Status::Ok => "ok",
                Status::Failures => "completed_with_failures",
                Status::BoundViolation => "bound_violation",
            };
            if let Err(e) = meta.write(&spec, status, Some(&outcome), None) {
                eprintln!("es2n: {e:#}");
                return ExitCode::FAILURE;
            }
            println!("{}", outcome.summary);
            if outcome.status == Status::Ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("es2n: {status}: see {}", spec.out.join("meta.json").display());
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            let msg = format!("{e:#}");
            eprintln!("es2n: {} failed: {msg}", spec.experiment);
            if let Err(e) = meta.write(&spec, "error", None, Some(&msg)) {
                eprintln!("es2n: {e:#}");
            }
            ExitCode::FAILURE
        }
    }
}
