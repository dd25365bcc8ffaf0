//! Command-line entry point.
//!
//! Exit codes: 0 all checks passed, 1 configuration or run error, 2 a
//! statistical check failed, 3 an input or output file could not be used.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use guided_es::experiment::{default_output_dir, run_experiment, ExperimentConfig, ExperimentKind};
use guided_es::Error;

#[derive(Parser, Debug)]
#[command(name = "guided-es", version, about = "Run gradient-estimation experiments and theory checks")]
struct Cli {
    /// train | gradient-alignment | noise | theory.drift | theory.hitting |
    /// theory.theorem2 | theory.prop1 | theory.prop2
    experiment: String,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $GUIDED_ES_OUT or ./runs, plus <experiment>-seed<N>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for objective evaluations.
    #[arg(long)]
    threads: Option<usize>,
    /// Dotted config assignment, e.g. estimator.p_random=50. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// MNIST image file (IDX, optionally gzipped); selects MNIST data.
    #[arg(long)]
    mnist_images: Option<PathBuf>,
    /// MNIST label file (IDX, optionally gzipped).
    #[arg(long)]
    mnist_labels: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Parse { .. } => 3,
        _ => 1,
    }
}

fn toml_string(p: &std::path::Path) -> String {
    toml::Value::String(p.display().to_string()).to_string()
}

fn run(cli: Cli) -> Result<bool, Error> {
    let kind: ExperimentKind = cli.experiment.parse()?;
    let mut overrides = cli.overrides;
    if cli.mnist_images.is_some() || cli.mnist_labels.is_some() {
        overrides.push("data.source=\"mnist\"".into());
    }
    if let Some(p) = &cli.mnist_images {
        overrides.push(format!("data.mnist_images={}", toml_string(p)));
    }
    if let Some(p) = &cli.mnist_labels {
        overrides.push(format!("data.mnist_labels={}", toml_string(p)));
    }
    let mut cfg = ExperimentConfig::load(&cli.config, &overrides)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    let dir = cli.out.unwrap_or_else(|| default_output_dir(kind, cfg.seed));
    let outcome = run_experiment(kind, &cfg, &dir)?;
    for c in &outcome.checks {
        println!(
            "{} {}: measured {:.6} vs {:.6}{}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.expected,
            c.std_err.map(|s| format!(" (se {s:.2e})")).unwrap_or_default()
        );
    }
    if let Some(e) = &outcome.aborted {
        eprintln!("run aborted: {e}");
        return Err(Error::Domain(e.clone()));
    }
    println!("reports written to {}", outcome.dir.display());
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
