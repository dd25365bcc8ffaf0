//! Fitness-permutation noise on a linear objective: with one surrogate a
//! shuffled update replaces the only good direction, with four the older
//! ones keep the alignment up.
//!
//!     cargo run --release --example fitness_noise

use guided_es::estimators::{permute_fitness, EstimatorConfig, IterativeEstimator};
use guided_es::linalg::{cosine, ParamVector, RngSeed};
use guided_es::objectives::linear_objective;

fn mean_alignment(k: usize, prob: f64) -> guided_es::Result<f64> {
    let n = 200;
    let c = ParamVector::gaussian(n, &mut RngSeed(1).rng());
    let f = linear_objective(c.clone())?;
    let theta = vec![0.0; n];
    let cfg = EstimatorConfig { sigma: 1.0, p_random: 10 - k, k_history: k, noise_permute_prob: prob, ..Default::default() };
    let mut est = IterativeEstimator::new(cfg)?;
    let mut tail = Vec::new();
    for t in 0..400 {
        let g = est.estimate(&f, &theta, RngSeed(2).derive(t))?;
        if t >= 200 {
            tail.push(cosine(&g.direction, &c)?.powi(2));
        }
        est.record(g.direction);
    }
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

fn main() -> guided_es::Result<()> {
    let shuffled = permute_fitness(&[1.0, 2.0, 3.0, 4.0], true, &mut RngSeed(3).rng());
    println!("one permuted update: [1, 2, 3, 4] -> {shuffled:?}");
    println!("mean x^2 over steps 200..400, 10 directions per update");
    for k in [1, 4] {
        println!("k={k}: clean {:.3}  noisy(0.2) {:.3}", mean_alignment(k, 0.0)?, mean_alignment(k, 0.2)?);
    }
    Ok(())
}
