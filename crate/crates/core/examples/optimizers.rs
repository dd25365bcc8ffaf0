//! SGD and Adam driven by guided gradient estimates on a quadratic, plus
//! rank-based fitness shaping.
//!
//!     cargo run --release --example optimizers

use guided_es::estimators::{EstimatorConfig, IterativeEstimator};
use guided_es::linalg::{ParamVector, RngSeed};
use guided_es::objectives::{quadratic_objective, Objective, QuadraticSpec};
use guided_es::optimizers::{fitness_shape, Optimizer, OptimizerKind};

fn main() -> guided_es::Result<()> {
    let n = 200;
    let spec = QuadraticSpec {
        hessian_eigenvalues: (0..n).map(|i| 0.5 + i as f64 / n as f64).collect(),
        rotation_seed: RngSeed(1),
        linear_term: ParamVector::zeros(n),
    };
    let f = quadratic_objective(&spec)?;
    for (kind, lr) in [(OptimizerKind::Sgd, 0.5), (OptimizerKind::Adam, 0.05)] {
        let mut theta = ParamVector::gaussian(n, &mut RngSeed(2).rng()).into_inner();
        let mut opt = Optimizer::new(kind, n, lr)?;
        let mut est = IterativeEstimator::new(EstimatorConfig { p_random: 9, k_history: 1, ..Default::default() })?;
        print!("{kind:?} lr={lr}: f0={:.3}", f.value(&theta));
        for t in 0..300 {
            let g = est.estimate(&f, &theta, RngSeed(5).derive(t))?;
            let update = opt.step(&mut theta, &g.direction)?;
            est.record(update);
        }
        println!("  f300={:.3}", f.value(&theta));
    }

    let raw = [3.0, -1.0, 10.0, 0.5, 0.5];
    println!("fitness_shape({raw:?}) = {:?}", fitness_shape(&raw));
    Ok(())
}
