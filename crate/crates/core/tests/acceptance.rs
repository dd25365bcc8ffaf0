//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each and exits nonzero if any failed.
//!
//! Runtime limits are part of the criteria, so run it optimized (the test
//! profile is) and on an otherwise idle machine.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use guided_es::experiment::{
    run_experiment, run_gradient_alignment, run_noise_study, run_theory, run_train, Check, ExperimentConfig,
    ExperimentKind,
};
use guided_es::linalg::RngSeed;
use guided_es::objectives::{central_difference, init_params, Batch, MlpObjective, MlpSpec, Objective};
use rand::Rng;

fn config(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    ExperimentConfig::load(&path, &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn with_seed(mut cfg: ExperimentConfig, seed: u64) -> ExperimentConfig {
    cfg.seed = seed;
    cfg
}

fn failed(checks: &[Check]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} measured {:.6} vs {:.6}", c.name, c.measured, c.expected))
        .collect()
}

fn summarize(checks: &[Check]) -> (bool, String) {
    let bad = failed(checks);
    if bad.is_empty() {
        (true, format!("{} checks", checks.len()))
    } else {
        (false, bad.join("; "))
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn run(id: usize, name: &str, limit: Option<Duration>, body: impl FnOnce() -> (bool, String)) -> bool {
    let start = Instant::now();
    let (ok, detail) = body();
    let elapsed = start.elapsed();
    let in_time = limit.map_or(true, |l| elapsed < l);
    let outcome = Outcome {
        passed: ok && in_time,
        detail: match limit {
            Some(l) if !in_time => format!("{detail}; runtime {:.1}s over limit {:.0}s", elapsed.as_secs_f64(), l.as_secs_f64()),
            Some(l) => format!("{detail}; {:.1}s (limit {:.0}s)", elapsed.as_secs_f64(), l.as_secs_f64()),
            None => format!("{detail}; {:.1}s", elapsed.as_secs_f64()),
        },
    };
    println!("{} [{id:2}] {name}: {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.detail);
    outcome.passed
}

fn theory(kind: ExperimentKind, file: &str) -> (bool, String) {
    match run_theory(kind, &config(file)) {
        Ok(r) => summarize(&r.checks),
        Err(e) => (false, e.to_string()),
    }
}

fn optimality() -> (bool, String) {
    theory(ExperimentKind::TheoryProp1, "theory_prop1.toml")
}

fn captured_energy() -> (bool, String) {
    theory(ExperimentKind::TheoryProp2, "theory_prop2.toml")
}

fn linear_drift() -> (bool, String) {
    theory(ExperimentKind::TheoryDrift, "theory_drift.toml")
}

fn hitting_time() -> (bool, String) {
    theory(ExperimentKind::TheoryHitting, "theory_hitting.toml")
}

fn rotating_fixed_point() -> (bool, String) {
    theory(ExperimentKind::TheoryTheorem2, "theory_theorem2.toml")
}

/// 10 random architectures and batches, 20 random coordinates each.
fn backprop_vs_finite_differences() -> (bool, String) {
    let mut rng = RngSeed(6).rng();
    let mut worst = 0.0f64;
    for cfg in 0..10 {
        let inputs = rng.gen_range(2..12);
        let classes = rng.gen_range(2..6);
        let mut sizes = vec![inputs];
        sizes.extend((0..rng.gen_range(1..3)).map(|_| rng.gen_range(2..16)));
        sizes.push(classes);
        let spec = MlpSpec::new(sizes).expect("valid sizes");
        let n = rng.gen_range(1..20);
        let batch = Batch {
            features: (0..n * inputs).map(|_| rng.gen_range(0.0..1.0)).collect(),
            feature_dim: inputs,
            labels: (0..n).map(|_| rng.gen_range(0..classes)).collect(),
        };
        let f = MlpObjective::new(&spec, &batch).expect("valid batch");
        let theta = init_params(&spec, RngSeed(1000 + cfg));
        let g = f.gradient(&theta).expect("mlp gradient");
        for _ in 0..20 {
            let i = rng.gen_range(0..spec.param_count());
            let fd = central_difference(&f, &theta, i, 1e-4);
            worst = worst.max((fd - g[i]).abs() / g[i].abs().max(fd.abs()).max(1e-6));
        }
    }
    (worst < 1e-5, format!("max relative error {worst:.2e} (bound 1e-5)"))
}

fn alignment() -> (bool, String) {
    let base = config("gradient_alignment.toml");
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 1..=3 {
        match run_gradient_alignment(&with_seed(base.clone(), seed)) {
            Ok(r) => {
                let (pass, detail) = summarize(&r.checks());
                ok &= pass && r.error.is_none();
                parts.push(format!(
                    "seed {seed}: ratio>1 on {:.1}%, geo-mean {:.3}{}",
                    100.0 * r.ratio_above_one,
                    r.ratio_geo_mean,
                    if pass { String::new() } else { format!(" [{detail}]") }
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("seed {seed}: {e}"));
            }
        }
    }
    (ok, parts.join(", "))
}

fn training() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for file in ["train_sgd.toml", "train_adam.toml"] {
        let base = config(file);
        for seed in 1..=3 {
            match run_train(&with_seed(base.clone(), seed)) {
                Ok(r) => {
                    let checks = r.checks();
                    let pass = !checks.is_empty() && checks.iter().all(|c| c.passed);
                    ok &= pass;
                    let c = &checks;
                    parts.push(format!(
                        "{} seed {seed}: updates {}/{} best {:.3}/{:.3}{}",
                        format!("{:?}", base.optimizer.kind).to_lowercase(),
                        c[0].measured,
                        c[0].expected,
                        c[1].measured,
                        c[1].expected,
                        if pass { "" } else { " FAIL" }
                    ));
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("{file} seed {seed}: {e}"));
                }
            }
        }
    }
    (ok, parts.join(", "))
}

fn noise() -> (bool, String) {
    match run_noise_study(&config("noise.toml")) {
        Ok(r) => summarize(&r.checks()),
        Err(e) => (false, e.to_string()),
    }
}

fn csv_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&d).expect("readable dir").map(|e| e.expect("entry").path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n == "run.csv" || n == "lineage.csv") {
                out.push((p.strip_prefix(dir).expect("under dir").to_path_buf(), fs::read(&p).expect("readable")));
            }
        }
    }
    out.sort();
    out
}

/// Short noisy training and alignment runs at 1, 4 and 8 workers.
fn determinism() -> (bool, String) {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut train = config("train_adam.toml");
    train.run.steps = 15;
    train.optimizer.lr_grid.clear();
    train.estimator.noise_permute_prob = 0.3;
    let mut align = config("gradient_alignment.toml");
    align.run.steps = 8;
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, cfg) in [(ExperimentKind::Train, train), (ExperimentKind::GradientAlignment, align)] {
        let mut reference: Option<Vec<(PathBuf, Vec<u8>)>> = None;
        for threads in [1, 4, 8] {
            let mut c = cfg.clone();
            c.threads = Some(threads);
            c.report.no_svg = true;
            let dir = tmp.path().join(format!("{}-{threads}", kind.name()));
            if let Err(e) = run_experiment(kind, &c, &dir) {
                return (false, format!("{kind} at {threads} threads: {e}"));
            }
            let files = csv_files(&dir);
            match &reference {
                None => reference = Some(files),
                Some(r) => {
                    if *r != files {
                        ok = false;
                        parts.push(format!("{kind}: {threads} threads differ from 1 thread"));
                    }
                }
            }
        }
        let files = reference.unwrap_or_default();
        parts.push(format!("{kind}: {} csv files identical at 1/4/8 threads", files.len()));
        ok &= !files.is_empty();
    }
    (ok, parts.join(", "))
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "span optimality of the guided estimate", Some(secs(10)), optimality),
        run(2, "captured energy P/N", Some(secs(20)), captured_energy),
        run(3, "linear drift (1 - x^2) P/(N - 1)", Some(secs(30)), linear_drift),
        run(4, "hitting time bounds", Some(secs(60)), hitting_time),
        run(5, "rotating-gradient fixed point", Some(secs(120)), rotating_fixed_point),
        run(6, "backprop against finite differences", Some(secs(10)), backprop_vs_finite_differences),
        run(7, "gradient alignment ratio, 3 seeds", Some(secs(300)), alignment),
        run(8, "updates to threshold and best loss, SGD and Adam", None, training),
        run(9, "fitness-permutation noise", Some(secs(600)), noise),
        run(10, "thread-count determinism", None, determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
