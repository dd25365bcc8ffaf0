//! Reusing the last estimate as surrogate on a linear objective: the squared
//! cosine with the gradient climbs towards 1 without moving the parameters.
//!
//!     cargo run --release --example iterative_alignment

use guided_es::estimators::{EstimatorConfig, IterativeEstimator};
use guided_es::linalg::{cosine, ParamVector, RngSeed};
use guided_es::objectives::linear_objective;
use guided_es::theory::{hitting_time_bound, ChainParams};

fn main() -> guided_es::Result<()> {
    let (n, p, delta) = (101, 10, 0.1);
    let c = ParamVector::gaussian(n, &mut RngSeed(1).rng());
    let f = linear_objective(c.clone())?;
    let theta = vec![0.0; n];
    let mut est = IterativeEstimator::new(EstimatorConfig { sigma: 1.0, p_random: p, k_history: 1, ..Default::default() })?;

    let bound = hitting_time_bound(&ChainParams::linear(n, p, delta));
    println!("expected hitting time bound for x^2 >= {}: {:.2}", 1.0 - delta, bound.bound);
    for t in 0..40 {
        let g = est.estimate(&f, &theta, RngSeed(100).derive(t))?;
        let x_sq = cosine(&g.direction, &c)?.powi(2);
        println!("t={t:2}  x^2={x_sq:.4}");
        if x_sq >= 1.0 - delta {
            println!("hit after {} steps", t + 1);
            break;
        }
        est.record(g.direction);
    }
    Ok(())
}
