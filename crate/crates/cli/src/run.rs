//! Experiment runners. Each writes its CSVs under the output directory,
//! streaming rows in trial order, and returns an [`Outcome`].

use std::fs::{self, File};
use std::io::{LineWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use es2n::analysis::{mlle, spectrum_along};
use es2n::numerics::{derive_seed, format_real, uniform_matrix};
use es2n::tasks::memory::{mc_trial, mix_grid, summarize, sweep_seed, write_mc_k_rows, write_mc_summary_csv};
use es2n::tasks::mso::mso8_experiment;
use es2n::tasks::search::{best_index, record, write_search_row, TrialRecord, SEARCH_CSV_HEADER};
use es2n::tasks::tradeoff::{best_cells, evaluate_trial, sample_config, write_tradeoff_csv, TradeoffTrial};
use es2n::tasks::{mean_std, McResult, MsoRun};
use es2n::{Matrix, Reservoir, SeededRng, Trajectory};

use crate::spec::{Experiment, ExperimentSpec, InputKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Some trials failed; the others completed.
    Failures,
    /// A bound check did not hold.
    BoundViolation,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub status: Status,
    pub summary: String,
    pub total_trials: usize,
    pub failed_trials: usize,
    /// Reservoir seed of every trial, in trial order.
    pub trial_seeds: Vec<u64>,
    pub seed_derivation: &'static str,
    pub files: Vec<String>,
    pub results: serde_json::Value,
}

impl Outcome {
    fn status_for_failures(failed: usize) -> Status {
        if failed == 0 {
            Status::Ok
        } else {
            Status::Failures
        }
    }
}

pub fn run(spec: &ExperimentSpec) -> anyhow::Result<Outcome> {
    match spec.experiment {
        Experiment::Mc => run_mc(spec),
        Experiment::Tradeoff => run_tradeoff(spec),
        Experiment::Mso8 => run_mso8(spec),
        Experiment::Spectrum => run_spectrum(spec),
        Experiment::Mlle => run_mlle(spec),
        Experiment::Search => run_search(spec),
    }
}

/// Line-buffered CSV file, so an interrupted run keeps every finished row.
struct Csv {
    name: String,
    w: LineWriter<File>,
}

impl Csv {
    fn create(dir: &Path, name: &str, header: &str) -> anyhow::Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = LineWriter::new(file);
        writeln!(w, "{header}")?;
        Ok(Self { name: name.to_string(), w })
    }
}

/// Evaluates `f(i)` for `i in start..n` on the worker pool in batches and
/// hands the results to `sink` strictly in index order.
fn in_order<T, F, S>(start: usize, n: usize, f: F, mut sink: S) -> anyhow::Result<()>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
    S: FnMut(usize, T) -> anyhow::Result<()>,
{
    let batch = 4 * rayon::current_num_threads().max(1);
    let mut i = start;
    while i < n {
        let end = (i + batch).min(n);
        let results: Vec<T> = (i..end).into_par_iter().map(&f).collect();
        for (k, r) in results.into_iter().enumerate() {
            sink(i + k, r)?;
        }
        i = end;
    }
    Ok(())
}

fn csv_text(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

fn drive_inputs(spec: &ExperimentSpec, seed: u64) -> Matrix {
    let d = spec.drive;
    match d.input {
        InputKind::Constant => Matrix::row_vector(&vec![d.amplitude; d.steps]),
        InputKind::Uniform => {
            let mut rng = SeededRng::new(derive_seed(seed, 1));
            uniform_matrix(&mut rng, 1, d.steps, -d.amplitude.abs(), d.amplitude.abs())
        }
    }
}

fn driven(spec: &ExperimentSpec, seed: u64) -> es2n::Result<(Reservoir, Trajectory)> {
    let reservoir = Reservoir::new(spec.model.config(seed))?;
    let traj = reservoir.drive(&drive_inputs(spec, seed), None, None)?;
    Ok((reservoir, traj))
}

fn trial_seeds(master: u64, n: usize) -> Vec<u64> {
    (0..n).map(|j| derive_seed(master, j as u64)).collect()
}

fn mean_of(values: &[f64]) -> Option<(f64, f64)> {
    (!values.is_empty()).then(|| mean_std(values))
}

// ---------------------------------------------------------------- mc

fn run_mc(spec: &ExperimentSpec) -> anyhow::Result<Outcome> {
    let dir = &spec.out;
    let settings = spec.mc.settings();
    let sweep = spec.mc.sweep && spec.model.kind.has_mix();
    let points = if sweep {
        mix_grid(spec.mc.grid_points, &spec.mc.grid_exponents, spec.seed)
    } else {
        vec![spec.model.mix]
    };
    let n_seeds = spec.trials;
    let seed_of = |p: usize, j: usize| {
        if sweep {
            sweep_seed(spec.seed, p, j)
        } else {
            derive_seed(spec.seed, j as u64)
        }
    };
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..n_seeds).map(move |j| (p, j))).collect();

    let mut mc_k = Csv::create(dir, "mc_k.csv", "model,mix,seed,k,mc_k")?;
    let mut runs = Csv::create(dir, "mc_runs.csv", "model,mix,seed,mc,error")?;
    let mut results: Vec<McResult> = Vec::with_capacity(jobs.len());
    in_order(
        0,
        jobs.len(),
        |i| {
            let (p, j) = jobs[i];
            let mut model = spec.model;
            model.mix = points[p];
            mc_trial(&model.config(seed_of(p, j)), &settings)
        },
        |_, r| {
            write_mc_k_rows(&mut mc_k.w, &r)?;
            writeln!(
                runs.w,
                "{},{},{},{},{}",
                r.kind,
                format_real(r.mix),
                r.seed,
                format_real(r.mc),
                csv_text(r.error.as_deref().unwrap_or(""))
            )?;
            results.push(r);
            Ok(())
        },
    )?;

    let summary = summarize(&results);
    let path = dir.join("mc_summary.csv");
    write_mc_summary_csv(File::create(&path).with_context(|| format!("creating {}", path.display()))?, &summary)?;

    let failed = results.iter().filter(|r| r.is_failed()).count();
    let line = if sweep {
        let peak = summary
            .iter()
            .max_by(|a, b| a.mean.total_cmp(&b.mean))
            .expect("grid is never empty");
        format!(
            "MC peak {:.2} +- {:.2} at mix {:.4} ({}, {} grid points x {} seeds, {failed} failed fits)",
            peak.mean,
            peak.std,
            peak.mix,
            spec.model.kind,
            summary.len(),
            n_seeds
        )
    } else {
        let s = &summary[0];
        format!(
            "MC = {:.2} +- {:.2} over {} seeds ({}, n_r {}, mix {}, {failed} failed fits)",
            s.mean, s.std, s.n, spec.model.kind, spec.model.n_r, spec.model.mix
        )
    };
    Ok(Outcome {
        status: Outcome::status_for_failures(failed),
        summary: line,
        total_trials: results.len(),
        failed_trials: failed,
        trial_seeds: results.iter().map(|r| r.seed).collect(),
        seed_derivation: if sweep {
            "reservoir seed of (grid point p, seed j) = derive_seed(derive_seed(master, p), j); grid drawn from master"
        } else {
            "reservoir seed of trial j = derive_seed(master, j)"
        },
        files: vec![mc_k.name, runs.name, "mc_summary.csv".into()],
        results: json!({ "summary": summary }),
    })
}

// ---------------------------------------------------------------- tradeoff

fn run_tradeoff(spec: &ExperimentSpec) -> anyhow::Result<Outcome> {
    let dir = &spec.out;
    let kind = spec.model.kind;
    let settings = spec.tradeoff.settings(spec.model.n_r);
    let (taus, log_nus) = spec.tradeoff.axes();

    let mut trials_csv = Csv::create(dir, "tradeoff_trials.csv", "trial,model,rho,omega,mix,seed,error")?;
    let mut trials: Vec<TradeoffTrial> = Vec::with_capacity(spec.trials);
    in_order(
        0,
        spec.trials,
        |i| {
            let config = sample_config(kind, &settings, derive_seed(spec.seed, i as u64));
            let outcome = evaluate_trial(&config, &settings, &taus, &log_nus).map_err(|e| e.to_string());
            TradeoffTrial { config, outcome }
        },
        |i, t| {
            let c = &t.config;
            writeln!(
                trials_csv.w,
                "{i},{},{},{},{},{},{}",
                c.kind,
                format_real(c.rho),
                format_real(c.omega),
                format_real(c.mix),
                c.seed,
                csv_text(t.outcome.as_ref().err().map_or("", String::as_str))
            )?;
            trials.push(t);
            Ok(())
        },
    )?;

    let cells = best_cells(&trials, &taus, &log_nus);
    let path = dir.join("tradeoff.csv");
    write_tradeoff_csv(File::create(&path).with_context(|| format!("creating {}", path.display()))?, kind, &cells)?;

    let failed = trials.iter().filter(|t| t.outcome.is_err()).count();
    let finite: Vec<f64> = cells.iter().map(|c| c.best_nrmse).filter(|v| v.is_finite()).collect();
    let line = match mean_of(&finite) {
        Some((mean, _)) => format!(
            "tradeoff {kind}: mean best NRMSE {mean:.4} over {} cells ({} trials, {failed} failed)",
            cells.len(),
            trials.len()
        ),
        None => format!("tradeoff {kind}: no trial produced a finite NRMSE ({failed} of {} failed)", trials.len()),
    };
    Ok(Outcome {
        status: Outcome::status_for_failures(failed),
        summary: line,
        total_trials: trials.len(),
        failed_trials: failed,
        trial_seeds: trials.iter().map(|t| t.config.seed).collect(),
        seed_derivation: "trial i samples (rho, omega, mix, reservoir seed) from derive_seed(master, i)",
        files: vec![trials_csv.name, "tradeoff.csv".into()],
        results: json!({ "taus": taus, "log_nus": log_nus }),
    })
}

// ---------------------------------------------------------------- mso8

fn run_mso8(spec: &ExperimentSpec) -> anyhow::Result<Outcome> {
    let dir = &spec.out;
    let settings = spec.mso8.settings();
    let windows = spec.mso8.eval_windows();
    let seeds = trial_seeds(spec.seed, spec.trials);

    let mut rows = Csv::create(
        dir,
        "mso_summary.csv",
        "trial,seed,window_start,window_len,nrmse,diverged_at,error",
    )?;
    let mut best: Option<(usize, MsoRun)> = None;
    let mut scores: Vec<f64> = Vec::new();
    let mut failed = 0;
    in_order(
        0,
        seeds.len(),
        |i| mso8_experiment(&spec.model.config(seeds[i]), &settings, &windows),
        |i, r| {
            match r {
                Ok(run) => {
                    let diverged = run.diverged_at.map_or(String::new(), |s| s.to_string());
                    for (w, v) in windows.iter().zip(&run.nrmse) {
                        writeln!(rows.w, "{i},{},{},{},{},{diverged},", seeds[i], w.start, w.len, format_real(*v))?;
                    }
                    if run.diverged_at.is_some() {
                        failed += 1;
                    }
                    let score = run.nrmse[0];
                    scores.push(score);
                    if score.is_finite() && best.as_ref().map_or(true, |(_, b)| score < b.nrmse[0]) {
                        best = Some((i, run));
                    }
                }
                Err(e) => {
                    failed += 1;
                    writeln!(rows.w, "{i},{},,,inf,,{}", seeds[i], csv_text(&e.to_string()))?;
                }
            }
            Ok(())
        },
    )?;

    let mut files = vec![rows.name];
    let line = match &best {
        Some((i, run)) => {
            let path = dir.join("mso_run.csv");
            run.write_csv(File::create(&path).with_context(|| format!("creating {}", path.display()))?, &windows)?;
            files.push("mso_run.csv".into());
            let parts: Vec<String> = windows
                .iter()
                .zip(&run.nrmse)
                .map(|(w, v)| format!("steps {}-{}: {v:.4e}", w.start, w.end()))
                .collect();
            format!(
                "MSO8 NRMSE {} (best of {} seeds: trial {i}, {}, {failed} failed)",
                parts.join(", "),
                seeds.len(),
                spec.model.kind
            )
        }
        None => format!("MSO8: no seed produced a finite NRMSE ({failed} of {} failed)", seeds.len()),
    };
    let finite: Vec<f64> = scores.iter().copied().filter(|v| v.is_finite()).collect();
    Ok(Outcome {
        status: Outcome::status_for_failures(failed),
        summary: line,
        total_trials: seeds.len(),
        failed_trials: failed,
        trial_seeds: seeds,
        seed_derivation: "reservoir seed of trial j = derive_seed(master, j)",
        files,
        results: json!({
            "best_trial": best.as_ref().map(|(i, _)| *i),
            "best_nrmse": best.as_ref().map(|(_, r)| r.nrmse.clone()),
            "first_window_mean_std": mean_of(&finite),
        }),
    })
}

// ---------------------------------------------------------------- spectrum

fn run_spectrum(spec: &ExperimentSpec) -> anyhow::Result<Outcome> {
    let dir = &spec.out;
    let seeds = trial_seeds(spec.seed, spec.trials);
    let slack = spec.tolerances.bound_slack;
    let mut eig = Csv::create(dir, "eigenvalues.csv", "trial,step,re,im,modulus")?;
    let mut bounds = Csv::create(
        dir,
        "bounds.csv",
        "trial,seed,gamma,sigma,center,half_width,inner,outer,leaky,conservative_inner,conservative_outer,max_violation,violations",
    )?;
    let (mut count, mut violations, mut failed) = (0usize, 0usize, 0usize);
    let mut worst: f64 = 0.0;
    let mut last = None;
    for (i, &seed) in seeds.iter().enumerate() {
        let report = match driven(spec, seed).and_then(|(r, t)| spectrum_along(&r, &t)) {
            Ok(rep) => rep,
            Err(e) => {
                failed += 1;
                eprintln!("trial {i}: {e}");
                continue;
            }
        };
        let mut v_here = 0;
        for (t, spectrum) in report.eigenvalues.iter().enumerate() {
            for l in spectrum {
                writeln!(
                    eig.w,
                    "{i},{t},{},{},{}",
                    format_real(l.re),
                    format_real(l.im),
                    format_real(l.modulus())
                )?;
                count += 1;
                if report.bounds.violation(*l) > slack {
                    v_here += 1;
                }
            }
        }
        let b = report.bounds;
        let c = report.conservative_bounds;
        let max_v = report.max_violation();
        writeln!(
            bounds.w,
            "{i},{seed},{},{},{},{},{},{},{},{},{},{},{v_here}",
            format_real(report.gamma),
            format_real(report.sigma),
            format_real(b.center_radius),
            format_real(b.half_width),
            format_real(b.inner),
            format_real(b.outer),
            b.leaky,
            format_real(c.inner),
            format_real(c.outer),
            format_real(max_v)
        )?;
        violations += v_here;
        worst = worst.max(max_v);
        last = Some(b);
    }

    let region = match last {
        Some(b) if b.leaky => format!("; last disc |lambda - {:.4}| <= {:.4}", b.center_radius, b.half_width),
        Some(b) => format!("; last annulus [{:.4}, {:.4}]", b.inner, b.outer),
        None => String::new(),
    };
    let line = format!(
        "spectrum {}: {violations} of {count} eigenvalues outside the bounds over {} reservoirs (worst excess {worst:.2e}{region}, {failed} failed)",
        spec.model.kind,
        seeds.len() - failed
    );
    let status = if violations > 0 {
        Status::BoundViolation
    } else {
        Outcome::status_for_failures(failed)
    };
    Ok(Outcome {
        status,
        summary: line,
        total_trials: seeds.len(),
        failed_trials: failed,
        trial_seeds: seeds,
        seed_derivation: "reservoir seed of trial j = derive_seed(master, j); uniform input stream derive_seed(reservoir seed, 1)",
        files: vec![eig.name, bounds.name],
        results: json!({ "eigenvalues": count, "violations": violations, "worst_excess": worst }),
    })
}

// ---------------------------------------------------------------- mlle

fn run_mlle(spec: &ExperimentSpec) -> anyhow::Result<Outcome> {
    let dir = &spec.out;
    let seeds = trial_seeds(spec.seed, spec.trials);
    let slack = spec.tolerances.bound_slack;
    let mut steps = Csv::create(dir, "mlle.csv", "trial,step,max_log_sv")?;
    let mut summary = Csv::create(dir, "mlle_summary.csv", "trial,seed,mlle,lower,upper,gamma,sigma,within_bounds")?;
    let mut values = Vec::new();
    let (mut outside, mut failed) = (0usize, 0usize);
    let mut last_bounds = None;
    for (i, &seed) in seeds.iter().enumerate() {
        let report = match driven(spec, seed).and_then(|(r, t)| mlle(&r, &t)) {
            Ok(rep) => rep,
            Err(e) => {
                failed += 1;
                eprintln!("trial {i}: {e}");
                continue;
            }
        };
        for (t, v) in report.per_step_max_log_sv.iter().enumerate() {
            writeln!(steps.w, "{i},{t},{}", format_real(*v))?;
        }
        let within = report.within_bounds(slack);
        writeln!(
            summary.w,
            "{i},{seed},{},{},{},{},{},{within}",
            format_real(report.mlle),
            format_real(report.lower),
            format_real(report.upper),
            format_real(report.gamma),
            format_real(report.sigma)
        )?;
        if !within {
            outside += 1;
        }
        values.push(report.mlle);
        last_bounds = Some((report.lower, report.upper));
    }

    let line = match (mean_of(&values), last_bounds) {
        (Some((mean, std)), Some((lo, hi))) => format!(
            "MLLE = {mean:.5} +- {std:.5} over {} reservoirs ({}, mix {}; last bounds [{lo:.5}, {hi:.5}], {outside} outside, {failed} failed)",
            values.len(),
            spec.model.kind,
            spec.model.mix
        ),
        _ => format!("MLLE: every trial failed ({failed})"),
    };
    let status = if outside > 0 {
        Status::BoundViolation
    } else {
        Outcome::status_for_failures(failed)
    };
    Ok(Outcome {
        status,
        summary: line,
        total_trials: seeds.len(),
        failed_trials: failed,
        trial_seeds: seeds,
        seed_derivation: "reservoir seed of trial j = derive_seed(master, j); uniform input stream derive_seed(reservoir seed, 1)",
        files: vec![steps.name, summary.name],
        results: json!({ "mlle": values, "outside_bounds": outside }),
    })
}

// ---------------------------------------------------------------- search

/// Complete rows of an earlier `search.csv`, checked against the trials the
/// current spec would draw.
fn resume_search(path: &Path, spec: &ExperimentSpec) -> anyhow::Result<Vec<TrialRecord>> {
    let space = spec.search_space();
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines: Vec<&str> = text.split_inclusive('\n').collect();
    if lines.last().is_some_and(|l| !l.ends_with('\n')) {
        lines.pop();
    }
    let Some((header, rows)) = lines.split_first() else {
        return Ok(Vec::new());
    };
    if header.trim_end() != SEARCH_CSV_HEADER {
        bail!("{} does not start with the search header", path.display());
    }
    let mut records = Vec::with_capacity(rows.len());
    for (expected, line) in rows.iter().enumerate() {
        let fields: Vec<&str> = line.trim_end().splitn(8, ',').collect();
        let parsed = (|| -> Option<(usize, u64, f64)> {
            Some((fields.first()?.parse().ok()?, fields.get(5)?.parse().ok()?, fields.get(6)?.parse().ok()?))
        })();
        let Some((trial, seed, value)) = parsed else {
            bail!("{}: cannot parse row {}", path.display(), expected + 1);
        };
        let config = space.sample(spec.seed, trial);
        if trial != expected || seed != config.seed {
            bail!(
                "{}: row {} does not match this spec (trial {trial}, seed {seed}); was it written with another seed or model?",
                path.display(),
                expected + 1
            );
        }
        let error = fields.get(7).map(|e| e.to_string()).filter(|e| !e.is_empty());
        records.push(TrialRecord { trial, config, value, error });
    }
    records.truncate(spec.trials);
    Ok(records)
}

fn run_search(spec: &ExperimentSpec) -> anyhow::Result<Outcome> {
    let dir = &spec.out;
    let space = spec.search_space();
    let settings = spec.mso8.settings();
    let windows = spec.mso8.eval_windows();
    let objective = |c: &es2n::ReservoirConfig| mso8_experiment(c, &settings, &windows).map(|r| r.worst());

    let path: PathBuf = dir.join("search.csv");
    let mut trials = if spec.resume && path.exists() {
        resume_search(&path, spec)?
    } else {
        Vec::new()
    };
    let resumed = trials.len();
    let mut csv = if resumed > 0 {
        // Rewrite the kept rows so a torn final line is dropped.
        let mut csv = Csv::create(dir, "search.csv", SEARCH_CSV_HEADER)?;
        for t in &trials {
            write_search_row(&mut csv.w, t)?;
        }
        csv
    } else {
        Csv::create(dir, "search.csv", SEARCH_CSV_HEADER)?
    };
    in_order(
        resumed,
        spec.trials,
        |i| record(i, space.sample(spec.seed, i), &objective),
        |_, t| {
            write_search_row(&mut csv.w, &t)?;
            trials.push(t);
            Ok(())
        },
    )?;
    drop(csv);

    let best = best_index(&trials);
    let failed = trials.iter().filter(|t| t.error.is_some()).count();
    let finite: Vec<f64> = trials.iter().map(|t| t.value).filter(|v| v.is_finite()).collect();
    let line = match best.map(|b| &trials[b]) {
        Some(b) => format!(
            "best NRMSE {:.4e} at trial {} (rho {:.4}, omega {:.4}, mix {:.4}); mean {:.4} over {} finite of {} trials ({}, n_r {}, {failed} failed{})",
            b.value,
            b.trial,
            b.config.rho,
            b.config.omega,
            b.config.mix,
            mean_of(&finite).map_or(f64::NAN, |m| m.0),
            finite.len(),
            trials.len(),
            spec.model.kind,
            spec.model.n_r,
            if resumed > 0 { format!(", {resumed} resumed") } else { String::new() }
        ),
        None => format!("search: no trial produced a finite NRMSE ({failed} of {} failed)", trials.len()),
    };
    Ok(Outcome {
        status: Outcome::status_for_failures(failed),
        summary: line,
        total_trials: trials.len(),
        failed_trials: failed,
        trial_seeds: trials.iter().map(|t| t.config.seed).collect(),
        seed_derivation: "trial i samples (rho, omega, mix, reservoir seed) from derive_seed(master, i)",
        files: vec!["search.csv".into()],
        results: json!({
            "best_trial": best,
            "resumed_trials": resumed,
            "mean_finite_nrmse": mean_of(&finite),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_order_preserves_index_order_across_batches() {
        let mut seen = Vec::new();
        in_order(3, 200, |i| i * i, |i, v| {
            assert_eq!(v, i * i);
            seen.push(i);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, (3..200).collect::<Vec<_>>());
    }

    #[test]
    fn csv_text_strips_separators() {
        assert_eq!(csv_text("a,b\nc"), "a;b;c");
    }
}
