//! MLP backpropagation against central finite differences.
//!
//!     cargo run --release --example gradient_check

use guided_es::dataset::synthetic_blobs;
use guided_es::linalg::RngSeed;
use guided_es::objectives::{central_difference, init_params, MlpObjective, MlpSpec, Objective};

fn main() -> guided_es::Result<()> {
    let data = synthetic_blobs(4, 10, 8, 0.2, RngSeed(1))?;
    let batch = data.full_batch();
    let spec = MlpSpec::new(vec![8, 16, 16, 4])?;
    let f = MlpObjective::new(&spec, &batch)?;
    let theta = init_params(&spec, RngSeed(2));
    let grad = f.gradient(&theta).expect("mlp has a gradient");
    println!("{} parameters, loss {:.4}", spec.param_count(), f.value(&theta));
    let mut worst = 0.0f64;
    for i in (0..spec.param_count()).step_by(37) {
        let fd = central_difference(&f, &theta, i, 1e-4);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    println!("max relative error {worst:.2e}");
    Ok(())
}
