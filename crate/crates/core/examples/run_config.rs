//! Runs any experiment from a TOML file, the library counterpart of the
//! `guided-es` binary.
//!
//!     cargo run --release --example run_config -- theory.prop2 configs/theory_prop2.toml

use std::path::Path;

use guided_es::experiment::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() -> guided_es::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (kind, path) = match args.as_slice() {
        [k, p] => (k.parse::<ExperimentKind>()?, p.clone()),
        _ => {
            eprintln!("usage: run_config <experiment> <config.toml>");
            std::process::exit(1);
        }
    };
    let cfg = ExperimentConfig::load(Path::new(&path), &[])?;
    let dir = std::env::temp_dir().join(format!("guided-es-{}-seed{}", kind.name(), cfg.seed));
    let outcome = run_experiment(kind, &cfg, &dir)?;
    for c in &outcome.checks {
        println!("{} {} {:.6} vs {:.6}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured, c.expected);
    }
    println!("reports in {}", dir.display());
    Ok(())
}
