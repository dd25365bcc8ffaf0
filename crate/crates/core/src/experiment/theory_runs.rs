//! Statistical check grids over the `theory` module.

use rand::Rng;

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::Check;
use crate::error::{Error, Result};
use crate::estimators::{guided_gradient_in_span, EstimatorConfig};
use crate::linalg::{sample_orthogonal_complement, sample_orthonormal, OrthoSet, ParamVector, RngSeed};
use crate::objectives::{quadratic_objective, Objective, QuadraticSpec};
use crate::theory::{
    captured_energy, fixed_point_a, fixed_point_closed_form, measure_linear_drift, measure_linear_drift_scalar,
    measure_rotating_drift, optimality_check_candidate, random_unit, simulate_linear_chain, simulate_rotating_chain,
    theorem2_expected, ChainParams,
};

/// Checks plus free-form metrics of one theory run.
#[derive(Clone, Debug)]
pub struct TheoryReport {
    pub checks: Vec<Check>,
    pub metrics: serde_json::Value,
}

fn within_se(name: String, measured: f64, expected: f64, se: f64, k: f64) -> Check {
    Check::near(name, measured, expected, Some(se), k * se)
}

pub fn run_theory(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<TheoryReport> {
    let t = &cfg.theory;
    let seed = RngSeed(cfg.seed);
    let chain = ChainParams { dim: t.dim, p_random: t.p_random, alpha: t.alpha, delta: t.delta };
    match kind {
        ExperimentKind::TheoryDrift => drift(cfg, &ChainParams { alpha: 1.0, ..chain }, seed),
        ExperimentKind::TheoryHitting => hitting(cfg, &chain, seed),
        ExperimentKind::TheoryTheorem2 => rotating(cfg, &chain, seed),
        ExperimentKind::TheoryProp1 => prop1(cfg, seed),
        ExperimentKind::TheoryProp2 => prop2(cfg, seed),
        other => Err(Error::Config(format!("{other} is not a theory experiment"))),
    }
}

fn drift(cfg: &ExperimentConfig, chain: &ChainParams, seed: RngSeed) -> Result<TheoryReport> {
    let t = &cfg.theory;
    let mut checks = Vec::new();
    for (i, &x) in t.x_sq_points.iter().enumerate() {
        let expected = crate::theory::expected_drift_linear(x, chain);
        let concrete = measure_linear_drift(x, chain, t.trials, seed.derive(i as u64))?;
        checks.push(within_se(format!("drift_x2={x}"), concrete.mean, expected, concrete.std_err, t.se_tolerance));
        let scalar = measure_linear_drift_scalar(x, chain, t.trials, seed.derive(1000 + i as u64))?;
        checks.push(within_se(format!("drift_scalar_x2={x}"), scalar.mean, expected, scalar.std_err, t.se_tolerance));
    }
    let report = simulate_linear_chain(chain, 0.0, (t.trials / 40).max(1), seed.derive(2000))?;
    for b in report.drift_bins.iter().filter(|b| b.measured.count >= t.min_bin_samples) {
        checks.push(within_se(
            format!("chain_drift_bin=[{:.2},{:.2})", b.lo, b.hi),
            b.measured.mean,
            b.expected,
            b.measured.std_err,
            t.se_tolerance,
        ));
    }
    let monotone = report.traces.iter().filter(|tr| tr.is_monotone()).count();
    checks.push(Check::at_least("monotone_trajectories", monotone as f64, report.traces.len() as f64, None));
    Ok(TheoryReport { checks, metrics: serde_json::json!({ "chain": chain, "trials": t.trials }) })
}

fn hitting(cfg: &ExperimentConfig, chain: &ChainParams, seed: RngSeed) -> Result<TheoryReport> {
    let t = &cfg.theory;
    let or = |v: &Vec<usize>, d: usize| if v.is_empty() { vec![d] } else { v.clone() };
    let deltas = if t.hitting_deltas.is_empty() { vec![t.delta] } else { t.hitting_deltas.clone() };
    let mut checks = Vec::new();
    let mut cells = Vec::new();
    let mut i = 0u64;
    for n in or(&t.hitting_dims, chain.dim) {
        for p in or(&t.hitting_p, chain.p_random) {
            for &delta in &deltas {
                let params = ChainParams { dim: n, p_random: p, alpha: 1.0, delta };
                params.validate().map_err(|e| Error::Config(e.to_string()))?;
                let r = simulate_linear_chain(&params, 0.0, t.trials, seed.derive(i))?.hitting;
                i += 1;
                let floor = (1.0 - delta) * n as f64 / (p + 1) as f64;
                let cell = format!("N={n},P={p},delta={delta}");
                checks.push(Check::at_most(format!("hitting_upper_{cell}"), r.mean, r.bound, Some(r.std_err)));
                checks.push(Check::at_least(format!("hitting_floor_{cell}"), r.mean, floor, Some(r.std_err)));
                cells.push(serde_json::json!({
                    "dim": n, "p_random": p, "delta": delta,
                    "mean": r.mean, "std_err": r.std_err, "bound": r.bound, "floor": floor,
                }));
            }
        }
    }
    Ok(TheoryReport { checks, metrics: serde_json::json!({ "trials": t.trials, "cells": cells }) })
}

fn rotating(cfg: &ExperimentConfig, chain: &ChainParams, seed: RngSeed) -> Result<TheoryReport> {
    let t = &cfg.theory;
    let a = fixed_point_a(chain)?;
    let closed = fixed_point_closed_form(chain);
    let mut checks = vec![
        Check::near("fixed_point_residual", theorem2_expected(a, chain), a, None, 1e-10),
        Check::near("fixed_point_closed_form", closed, a, None, 1e-9),
    ];
    let report = simulate_rotating_chain(chain, t.steps, t.trials, t.burn_in, seed)?;
    for b in report.conditional_bins.iter().filter(|b| b.measured.count >= t.min_bin_samples) {
        checks.push(Check::near(
            format!("conditional_mean_bin=[{:.2},{:.2})", b.lo, b.hi),
            b.measured.mean,
            b.expected,
            Some(b.measured.std_err),
            t.conditional_tolerance,
        ));
    }
    checks.push(Check::near(
        "long_run_mean",
        report.long_run.mean,
        a,
        Some(report.long_run.std_err),
        t.long_run_tolerance,
    ));
    let below = measure_rotating_drift((a - t.sign_offset).max(0.0), chain, t.sign_trials, seed.derive(1))?;
    let above = measure_rotating_drift((a + t.sign_offset).min(1.0), chain, t.sign_trials, seed.derive(2))?;
    checks.push(Check::at_least("drift_positive_below_a", below.mean, 0.0, Some(below.std_err)));
    checks.push(Check::at_most("drift_negative_above_a", above.mean, 0.0, Some(above.std_err)));
    Ok(TheoryReport {
        checks,
        metrics: serde_json::json!({
            "chain": chain,
            "fixed_point_a": a,
            "long_run": report.long_run,
            "mean_x_sq": report.mean_x_sq,
        }),
    })
}

/// One random optimality instance: a quadratic objective at a random point,
/// `k` orthonormal surrogates and `P` directions from their complement.
fn prop1_instance(cfg: &ExperimentConfig, seed: RngSeed) -> Result<(usize, usize, usize, f64, bool)> {
    let t = &cfg.theory;
    let mut rng = seed.rng();
    let n = rng.gen_range(2..=t.max_dim);
    let k = rng.gen_range(0..=t.max_k.min(n - 1));
    let p = rng.gen_range(1..=t.max_p.min(n - k));
    let spec = QuadraticSpec {
        hessian_eigenvalues: (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect(),
        rotation_seed: seed.derive(1),
        linear_term: ParamVector::gaussian(n, &mut rng),
    };
    let f = quadratic_objective(&spec)?;
    let theta = ParamVector::gaussian(n, &mut rng);
    let grad = f.gradient(&theta).expect("quadratic gradient");
    let surrogates = if k == 0 { OrthoSet::empty(n) } else { sample_orthonormal(n, k, seed.derive(2))? };
    let randoms = sample_orthogonal_complement(&surrogates, p, seed.derive(3))?;
    let est_cfg = EstimatorConfig { sigma: 1e-3, p_random: p, k_history: k, ..Default::default() };
    let est = guided_gradient_in_span(&f, &theta, &surrogates, &randoms, &est_cfg, seed.derive(4))?;
    let span = surrogates.concat(&randoms)?;
    let r = optimality_check_candidate(&grad, &est.direction, &span, t.span_trials, seed.derive(5))?;
    Ok((n, k, p, r.max_excess, r.passed))
}

fn prop1(cfg: &ExperimentConfig, seed: RngSeed) -> Result<TheoryReport> {
    let t = &cfg.theory;
    use rayon::prelude::*;
    let results: Vec<(usize, usize, usize, f64, bool)> =
        (0..t.instances as u64).into_par_iter().map(|i| prop1_instance(cfg, seed.derive(i))).collect::<Result<_>>()?;
    let worst = results.iter().map(|r| r.3).fold(0.0, f64::max);
    let failed = results.iter().filter(|r| !r.4).count();
    Ok(TheoryReport {
        checks: vec![
            Check::at_most("max_cosine_excess", worst, crate::theory::OPTIMALITY_TOL, None),
            Check::at_most("failed_instances", failed as f64, 0.0, None),
        ],
        metrics: serde_json::json!({ "instances": t.instances, "span_trials": t.span_trials, "max_excess": worst }),
    })
}

fn prop2(cfg: &ExperimentConfig, seed: RngSeed) -> Result<TheoryReport> {
    let t = &cfg.theory;
    let n = t.dim;
    let u = random_unit(n, seed.derive(u64::MAX))?;
    let mut checks = Vec::new();
    let mut cells = Vec::new();
    for (i, &(p, tol)) in t.prop2_cells.iter().enumerate() {
        let e = captured_energy(&OrthoSet::empty(n), p, &u, t.trials, seed.derive(i as u64))?;
        let expected = p as f64 / n as f64;
        checks.push(Check::near(format!("captured_energy_N={n},P={p}"), e.mean, expected, Some(e.std_err), tol));
        cells.push(serde_json::json!({ "p_random": p, "mean": e.mean, "std_err": e.std_err, "expected": expected }));
    }
    Ok(TheoryReport { checks, metrics: serde_json::json!({ "dim": n, "samples": t.trials, "cells": cells }) })
}
