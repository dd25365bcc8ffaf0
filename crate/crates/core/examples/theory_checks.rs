//! Closed-form convergence quantities next to their Monte-Carlo estimates.
//!
//!     cargo run --release --example theory_checks

use guided_es::theory::{
    expected_drift_linear, fixed_point_a, hitting_time_bound, measure_linear_drift, simulate_linear_chain,
    simulate_rotating_chain, ChainParams,
};
use guided_es::linalg::RngSeed;

fn main() -> guided_es::Result<()> {
    let linear = ChainParams::linear(101, 10, 0.1);
    for x_sq in [0.0, 0.25, 0.5, 0.75] {
        let m = measure_linear_drift(x_sq, &linear, 5000, RngSeed(1))?;
        println!(
            "drift at x^2={x_sq:.2}: {:.4} +- {:.4} (theory {:.4})",
            m.mean,
            m.std_err,
            expected_drift_linear(x_sq, &linear)
        );
    }

    let hit = simulate_linear_chain(&linear, 0.0, 200, RngSeed(2))?.hitting;
    let b = hitting_time_bound(&linear);
    println!("mean hitting time {:.2} +- {:.2}, bound {:.2}", hit.mean, hit.std_err, b.bound);

    let rotating = ChainParams { alpha: 0.95, ..linear };
    let a = fixed_point_a(&rotating)?;
    let r = simulate_rotating_chain(&rotating, 300, 50, 150, RngSeed(3))?;
    println!("fixed point A = {a:.6}, simulated long-run mean {:.4} +- {:.4}", r.long_run.mean, r.long_run.std_err);
    Ok(())
}
