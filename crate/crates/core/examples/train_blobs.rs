//! ES against the guided estimator on a small MLP, both at 10 evaluations
//! per update, with Adam.
//!
//!     cargo run --release --example train_blobs

use guided_es::experiment::{run_train, ExperimentConfig, Method};

fn main() -> guided_es::Result<()> {
    let cfg = ExperimentConfig::from_toml(
        r#"
        seed = 5
        [estimator]
        k_history = 1
        p_random = 4
        [optimizer]
        kind = "adam"
        learning_rate = 0.01
        [objective]
        kind = "mlp"
        hidden = [32, 32]
        [data]
        samples_per_class = 50
        [run]
        steps = 200
        "#,
        &[],
    )?;
    let report = run_train(&cfg)?;
    println!("loss threshold {:.4}", report.threshold);
    for m in [Method::Es, Method::Ours] {
        let r = &report.get(m).expect("both methods configured").run;
        println!(
            "{}: initial {:.4}, best {:.4}, updates to threshold {:?}",
            m.name(),
            r.initial_loss,
            r.best_loss(),
            r.updates_to(report.threshold)
        );
    }
    Ok(())
}
