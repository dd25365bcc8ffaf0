//! Experiment orchestration: configuration, training runs, theory check
//! grids and report files.
//!
//! [`run_experiment`] validates a config, runs the experiment on a worker
//! pool of the configured size and writes every report into one directory.
//! All randomness flows from `config.seed` through fixed derivation streams,
//! and evaluations are reduced in a fixed order, so `run.csv` does not
//! depend on the worker count.

pub mod config;
pub mod report;
pub mod runner;
pub mod theory_runs;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, ExperimentKind, Method};
pub use report::{Check, RunRecord};
pub use runner::{run_gradient_alignment, run_noise_study, run_train, Problem};
pub use theory_runs::run_theory;

use crate::error::{Error, Result};

/// Derivation streams of the run seed.
pub(crate) mod streams {
    pub const DATA: u64 = 1;
    pub const INIT: u64 = 2;
    pub const BATCH: u64 = 3;
    pub const UPDATE: u64 = 4;
    pub const OBJECTIVE: u64 = 5;
    pub const REPLICATE: u64 = 6;
    pub const BASELINE: u64 = 7;
}

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "GUIDED_ES_OUT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

/// Where a run writes when no directory is given: `$GUIDED_ES_OUT` (or
/// `runs`) joined with `<experiment>-seed<seed>`.
pub fn default_output_dir(kind: ExperimentKind, seed: u64) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_OUTPUT_ROOT.into());
    root.join(format!("{}-seed{seed}", kind.name()))
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub checks: Vec<Check>,
    pub metrics: serde_json::Value,
    /// Error that aborted a training run; reports up to it were written.
    pub aborted: Option<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.aborted.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

/// Validates `cfg`, runs `kind` and writes its reports under `dir`.
pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    cfg.validate(kind)?;
    let pool = thread_pool(cfg.threads)?;
    let (checks, metrics, aborted) = pool.install(|| execute(kind, cfg, dir))?;
    let outcome = Outcome { dir: dir.to_path_buf(), checks, metrics, aborted };
    report::write_checks(dir, &outcome.checks)?;
    report::write_summary(
        dir,
        &report::Summary {
            experiment: kind.name(),
            seed: cfg.seed,
            git_describe: report::git_describe(),
            config: cfg,
            metrics: outcome.metrics.clone(),
            checks: &outcome.checks,
            passed: outcome.passed(),
        },
    )?;
    Ok(outcome)
}

type Executed = (Vec<Check>, serde_json::Value, Option<String>);

fn execute(kind: ExperimentKind, cfg: &ExperimentConfig, dir: &Path) -> Result<Executed> {
    let svg = !cfg.report.no_svg;
    match kind {
        ExperimentKind::Train => {
            let r = run_train(cfg)?;
            let mut series = Vec::new();
            for m in &r.methods {
                report::write_run(&dir.join(m.method().name()), &m.run.records, svg)?;
                series.push((m.method().name(), m.run.records.iter().map(|x| (x.step as f64, x.loss)).collect::<Vec<_>>()));
            }
            if svg {
                let refs: Vec<(&str, &[(f64, f64)])> = series.iter().map(|(n, s)| (*n, s.as_slice())).collect();
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("loss.svg"), report::line_chart_svg(&refs, "update", "training loss"))?;
            }
            let aborted = r.methods.iter().find_map(|m| m.run.error.clone());
            Ok((r.checks(), r.metrics(), aborted))
        }
        ExperimentKind::GradientAlignment => {
            let r = run_gradient_alignment(cfg)?;
            report::write_run(dir, &r.records, svg)?;
            Ok((r.checks(), r.metrics(), r.error.clone()))
        }
        ExperimentKind::Noise => {
            let r = run_noise_study(cfg)?;
            let mut table = String::from("cell,replicate,proper_updates,total_updates,final_loss\n");
            for c in &r.cells {
                for (i, run) in c.runs.iter().enumerate() {
                    report::write_run(&dir.join(c.label()).join(format!("rep{i}")), &run.records, svg)?;
                    let _ = writeln!(
                        table,
                        "{},{i},{},{},{:.16e}",
                        c.label(),
                        run.proper_curve().len(),
                        run.records.len(),
                        run.final_loss()
                    );
                }
            }
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("noise.csv"), table)?;
            let aborted = r.cells.iter().flat_map(|c| &c.runs).find_map(|x| x.error.clone());
            Ok((r.checks(), r.metrics(), aborted))
        }
        _ => {
            let r = run_theory(kind, cfg)?;
            Ok((r.checks, r.metrics, None))
        }
    }
}
