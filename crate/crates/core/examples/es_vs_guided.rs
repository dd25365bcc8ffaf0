//! One gradient estimate from plain antithetic ES and from the guided
//! estimator on a random quadratic, at the same evaluation budget.
//!
//!     cargo run --release --example es_vs_guided

use guided_es::estimators::{es_gradient, guided_gradient, EstimatorConfig};
use guided_es::linalg::{cosine, OrthoSet, ParamVector, RngSeed};
use guided_es::objectives::{quadratic_objective, Objective, QuadraticSpec};

fn main() -> guided_es::Result<()> {
    let n = 1000;
    let mut rng = RngSeed(3).rng();
    let spec = QuadraticSpec {
        hessian_eigenvalues: (0..n).map(|i| 0.1 + i as f64 / n as f64).collect(),
        rotation_seed: RngSeed(4),
        linear_term: ParamVector::gaussian(n, &mut rng),
    };
    let f = quadratic_objective(&spec)?;
    let theta = ParamVector::gaussian(n, &mut rng);
    let grad = f.gradient(&theta).expect("quadratic has a gradient");

    // a noisy surrogate: the true gradient plus equal-norm random noise
    let noise = ParamVector::gaussian(n, &mut rng).normalized()?.scaled(grad.norm());
    let surrogate: Vec<f64> = grad.iter().zip(noise.iter()).map(|(g, e)| g + e).collect();
    let sur = OrthoSet::from_orthonormal(n, vec![ParamVector::from(surrogate).normalized()?])?;

    let budget = 20;
    let es_cfg = EstimatorConfig { p_random: budget, k_history: 0, ..Default::default() };
    let ours_cfg = EstimatorConfig { p_random: budget - 1, k_history: 1, ..Default::default() };
    println!("N = {n}, {} evaluations per estimate", es_cfg.evals_per_update());
    println!("surrogate cos      {:.4}", cosine(sur.directions()[0].as_slice(), &grad)?);
    for s in 0..5 {
        let es = es_gradient(&f, &theta, &es_cfg, RngSeed(s))?;
        let ours = guided_gradient(&f, &theta, &sur, &ours_cfg, RngSeed(s))?;
        assert_eq!(es.evals, ours.evals);
        println!(
            "seed {s}: cos ES {:.4}  cos guided {:.4}",
            cosine(&es.direction, &grad)?,
            cosine(&ours.direction, &grad)?
        );
    }
    Ok(())
}
