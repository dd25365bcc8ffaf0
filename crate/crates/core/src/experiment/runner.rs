//! Training loops: single-estimator training, the gradient-alignment
//! measurement run and the fitness-noise study.

use std::time::Instant;

use serde::Serialize;

use super::config::{DataSource, ExperimentConfig, Method, ObjectiveConfig};
use super::report::{ratio, Check, RunRecord};
use super::streams;
use crate::dataset::{load_mnist, synthetic_blobs, BatchIterator, Dataset};
use crate::error::{Error, Result};
use crate::estimators::{es_gradient, EstimatorConfig, GradientEstimate, IterativeEstimator};
use crate::linalg::{cosine, ParamVector, RngSeed};
use crate::objectives::{
    init_params, linear_objective, quadratic_objective, Batch, MlpObjective, MlpSpec, Objective, QuadraticSpec,
};
use crate::optimizers::Optimizer;
use crate::theory::random_abs_cosine_mean;

/// The objective being trained, with its data.
pub enum Problem {
    Mlp { spec: MlpSpec, data: Dataset, full: Batch, batch_size: usize },
    Fixed { objective: Box<dyn Objective>, theta0: ParamVector },
}

impl Problem {
    /// Builds the configured problem. Data and objective coefficients are
    /// drawn from streams of `seed`.
    pub fn build(cfg: &ExperimentConfig, seed: RngSeed) -> Result<Problem> {
        match &cfg.objective {
            ObjectiveConfig::Mlp { hidden } => {
                let d = &cfg.data;
                let data = match d.source {
                    DataSource::Blobs => synthetic_blobs(
                        d.num_classes,
                        d.samples_per_class,
                        d.feature_dim,
                        d.spread,
                        seed.derive(streams::DATA),
                    )?,
                    DataSource::Mnist => {
                        let images = d.mnist_images.as_ref().ok_or_else(|| Error::Config("missing mnist_images".into()))?;
                        let labels = d.mnist_labels.as_ref().ok_or_else(|| Error::Config("missing mnist_labels".into()))?;
                        load_mnist(images, labels, d.limit)?
                    }
                };
                let mut sizes = vec![data.feature_dim()];
                sizes.extend(hidden);
                sizes.push(data.num_classes());
                let spec = MlpSpec::new(sizes)?;
                let full = data.full_batch();
                Ok(Problem::Mlp { spec, data, full, batch_size: d.batch_size })
            }
            ObjectiveConfig::Linear { dim } => {
                let c = ParamVector::gaussian(*dim, &mut seed.derive(streams::OBJECTIVE).rng());
                Ok(Problem::Fixed { objective: Box::new(linear_objective(c)?), theta0: ParamVector::zeros(*dim) })
            }
            ObjectiveConfig::Quadratic { dim, eig_min, eig_max } => {
                let n = *dim;
                let ratio = if n > 1 { (eig_max / eig_min).powf(1.0 / (n - 1) as f64) } else { 1.0 };
                let eigs: Vec<f64> = (0..n).map(|i| eig_min * ratio.powi(i as i32)).collect();
                let mut rng = seed.derive(streams::OBJECTIVE).rng();
                let spec = QuadraticSpec {
                    hessian_eigenvalues: eigs,
                    rotation_seed: seed.derive(streams::OBJECTIVE).derive(1),
                    linear_term: ParamVector::gaussian(n, &mut rng),
                };
                let theta0 = ParamVector::gaussian(n, &mut rng);
                Ok(Problem::Fixed { objective: Box::new(quadratic_objective(&spec)?), theta0 })
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Problem::Mlp { spec, .. } => spec.param_count(),
            Problem::Fixed { objective, .. } => objective.dim(),
        }
    }

    pub fn initial_params(&self, seed: RngSeed) -> ParamVector {
        match self {
            Problem::Mlp { spec, .. } => init_params(spec, seed.derive(streams::INIT)),
            Problem::Fixed { theta0, .. } => theta0.clone(),
        }
    }

    /// Training loss (full dataset for the MLP).
    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        let v = match self {
            Problem::Mlp { spec, full, .. } => MlpObjective::new(spec, full)?.value(theta),
            Problem::Fixed { objective, .. } => objective.value(theta),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation { value: v, point: theta.to_vec() })
        }
    }

    pub fn batches(&self, seed: RngSeed) -> Result<Option<BatchIterator<'_>>> {
        match self {
            Problem::Mlp { data, batch_size, .. } => {
                Ok(Some(BatchIterator::new(data, *batch_size, seed.derive(streams::BATCH))?))
            }
            Problem::Fixed { .. } => Ok(None),
        }
    }

    /// Runs `body` against the objective of the next update: a fresh
    /// mini-batch for the MLP, the fixed objective otherwise.
    pub fn with_step<R>(
        &self,
        batches: &mut Option<BatchIterator<'_>>,
        body: impl FnOnce(&dyn Objective) -> Result<R>,
    ) -> Result<R> {
        match (self, batches) {
            (Problem::Mlp { spec, .. }, Some(it)) => {
                let batch = it.next().expect("endless iterator");
                body(&MlpObjective::new(spec, &batch)?)
            }
            (Problem::Fixed { objective, .. }, _) => body(objective.as_ref()),
            (Problem::Mlp { .. }, None) => Err(Error::Config("MLP problem needs a batch iterator".into())),
        }
    }
}

fn exact_gradient(f: &dyn Objective, theta: &[f64]) -> Result<ParamVector> {
    f.gradient(theta).ok_or(Error::DegenerateObjective("objective has no exact gradient"))
}

/// Estimator and learning rate of one training run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Arm {
    pub method: Method,
    pub estimator: EstimatorConfig,
    pub learning_rate: f64,
}

impl Arm {
    /// ES with `k + P` Gaussian directions, or the guided estimator with `k`
    /// surrogates and `P` random directions: both `2 (k + P)` evaluations.
    pub fn new(method: Method, cfg: &ExperimentConfig, learning_rate: f64) -> Arm {
        let estimator = match method {
            Method::Es => {
                EstimatorConfig { p_random: cfg.budget_directions(), k_history: 0, ..cfg.estimator.clone() }
            }
            Method::Ours => cfg.estimator.clone(),
        };
        Arm { method, estimator, learning_rate }
    }

    pub fn evals_per_update(&self) -> usize {
        self.estimator.evals_per_update()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    Updates(usize),
    /// Stop after this many updates whose coefficients were not permuted.
    ProperUpdates(usize),
}

/// Result of one training run. `error` holds the failure that cut the run
/// short, if any; `records` then covers the updates before it.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub arm: Arm,
    pub initial_loss: f64,
    pub records: Vec<RunRecord>,
    /// Whether each update was a proper (non-permuted) one.
    pub proper: Vec<bool>,
    pub error: Option<String>,
}

impl RunOutput {
    /// Number of updates until the loss first drops below `threshold`.
    pub fn updates_to(&self, threshold: f64) -> Option<usize> {
        self.records.iter().position(|r| r.loss < threshold).map(|i| i + 1)
    }

    pub fn best_loss(&self) -> f64 {
        self.records.iter().map(|r| r.loss).fold(self.initial_loss, f64::min)
    }

    pub fn final_loss(&self) -> f64 {
        self.records.last().map_or(self.initial_loss, |r| r.loss)
    }

    /// `(proper update count, loss)` after each proper update.
    pub fn proper_curve(&self) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .zip(&self.proper)
            .filter(|(_, &p)| p)
            .enumerate()
            .map(|(i, (r, _))| (i + 1, r.loss))
            .collect()
    }
}

struct StepOutcome {
    estimate: GradientEstimate,
    grad: ParamVector,
    cos: Option<f64>,
    update: ParamVector,
}

/// Trains `problem` with one arm, drawing update `t`'s randomness from
/// `seed.derive(UPDATE).derive(t)`.
pub fn train_arm(
    problem: &Problem,
    cfg: &ExperimentConfig,
    arm: &Arm,
    seed: RngSeed,
    stop: StopRule,
) -> Result<RunOutput> {
    let mut theta = problem.initial_params(seed);
    let initial_loss = problem.loss(&theta)?;
    let mut batches = problem.batches(seed)?;
    let mut optimizer = Optimizer::new(cfg.optimizer.kind, theta.len(), arm.learning_rate)?;
    let mut guided = match arm.method {
        Method::Ours => Some(IterativeEstimator::new(arm.estimator.clone())?),
        Method::Es => None,
    };
    let budget = arm.evals_per_update();
    let mut out = RunOutput { arm: arm.clone(), initial_loss, records: Vec::new(), proper: Vec::new(), error: None };
    let mut proper_count = 0;
    let mut prev_grad: Option<ParamVector> = None;
    let mut t = 0usize;
    loop {
        match stop {
            StopRule::Updates(n) if t >= n => break,
            StopRule::ProperUpdates(n) if proper_count >= n => break,
            _ => {}
        }
        let start = Instant::now();
        let useed = seed.derive(streams::UPDATE).derive(t as u64);
        let step = problem.with_step(&mut batches, |f| {
            let grad = exact_gradient(f, &theta)?;
            let estimate = match &guided {
                Some(g) => g.estimate(f, &theta, useed)?,
                None => es_gradient(f, &theta, &arm.estimator, useed)?,
            };
            if estimate.evals != budget {
                return Err(Error::Domain(format!(
                    "budget parity violated at update {t}: {} evaluations instead of {budget}",
                    estimate.evals
                )));
            }
            let cos = cosine(&estimate.direction, &grad).ok();
            let update = optimizer.step(&mut theta, &estimate.direction)?;
            Ok(StepOutcome { estimate, grad, cos, update })
        });
        let step = match step.and_then(|s| problem.loss(&theta).map(|l| (s, l))) {
            Ok(s) => s,
            Err(e) => {
                out.error = Some(e.to_string());
                return Ok(out);
            }
        };
        let (StepOutcome { estimate, grad, cos, update }, loss) = step;
        let consec = prev_grad.as_ref().and_then(|p| cosine(p, &grad).ok());
        prev_grad = Some(grad);
        if let Some(g) = guided.as_mut() {
            g.record(if cfg.run.store_raw_estimate { estimate.direction.clone() } else { update.clone() });
        }
        let (cos_es, cos_ours) = match arm.method {
            Method::Es => (cos, None),
            Method::Ours => (None, cos),
        };
        out.records.push(RunRecord {
            step: t,
            loss,
            cos_es,
            cos_ours,
            ratio: None,
            consec_cos: consec,
            update_norm: update.norm(),
            wall_ms: cfg.report.wall_clock.then(|| start.elapsed().as_secs_f64() * 1e3),
            seed: useed,
        });
        out.proper.push(!estimate.permuted);
        if !estimate.permuted {
            proper_count += 1;
        }
        t += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct GridPoint {
    pub learning_rate: f64,
    pub updates_to_threshold: Option<usize>,
    pub best_loss: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct MethodResult {
    pub run: RunOutput,
    pub grid: Vec<GridPoint>,
}

impl MethodResult {
    pub fn method(&self) -> Method {
        self.run.arm.method
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub threshold: f64,
    pub methods: Vec<MethodResult>,
}

impl TrainReport {
    pub fn get(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method() == method)
    }

    pub fn metrics(&self) -> serde_json::Value {
        let methods: serde_json::Map<String, serde_json::Value> = self
            .methods
            .iter()
            .map(|m| {
                let r = &m.run;
                (
                    m.method().name().to_string(),
                    serde_json::json!({
                        "learning_rate": r.arm.learning_rate,
                        "evals_per_update": r.arm.evals_per_update(),
                        "initial_loss": r.initial_loss,
                        "updates_to_threshold": r.updates_to(self.threshold),
                        "best_loss": r.best_loss(),
                        "final_loss": r.final_loss(),
                        "updates": r.records.len(),
                        "error": r.error,
                        "lr_grid": m.grid,
                    }),
                )
            })
            .collect();
        serde_json::json!({
            "loss_threshold": self.threshold,
            "methods": methods,
            // full-scale MNIST figures (1000x1000 hidden), for orientation only
            "full_scale_reference": {
                "es_adam": { "updates_to_0.6": 433, "best_loss": 0.242 },
                "ours_adam": { "updates_to_0.6": 182, "best_loss": 0.216 },
                "es_sgd": { "updates_to_0.6": 727, "best_loss": 0.305 },
                "ours_sgd": { "updates_to_0.6": 295, "best_loss": 0.278 },
            },
        })
    }

    /// With both methods present: the guided run reaches the threshold in
    /// strictly fewer updates and attains a strictly lower best loss.
    pub fn checks(&self) -> Vec<Check> {
        let (Some(es), Some(ours)) = (self.get(Method::Es), self.get(Method::Ours)) else {
            return Vec::new();
        };
        let steps = |m: &MethodResult| m.run.updates_to(self.threshold).map_or(f64::INFINITY, |s| s as f64);
        let (se, so) = (steps(es), steps(ours));
        vec![
            Check {
                name: "ours_fewer_updates_to_threshold".into(),
                measured: so,
                expected: se,
                std_err: None,
                tolerance: 0.0,
                passed: so < se,
            },
            Check {
                name: "ours_lower_best_loss".into(),
                measured: ours.run.best_loss(),
                expected: es.run.best_loss(),
                std_err: None,
                tolerance: 0.0,
                passed: ours.run.best_loss() < es.run.best_loss(),
            },
        ]
    }
}

/// Sort key of a grid run: lowest best loss, ties by updates to threshold;
/// failed runs last.
fn grid_key(run: &RunOutput, threshold: f64) -> (bool, f64, usize) {
    if run.error.is_some() {
        return (true, f64::INFINITY, usize::MAX);
    }
    (false, run.best_loss(), run.updates_to(threshold).unwrap_or(usize::MAX))
}

/// Trains every configured method (at every grid learning rate) from the
/// same seed. The loss threshold is shared: the configured value, or
/// `threshold_fraction` of the common initial loss.
pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainReport> {
    let seed = RngSeed(cfg.seed);
    let problem = Problem::build(cfg, seed)?;
    let initial = problem.loss(&problem.initial_params(seed))?;
    let threshold = cfg.run.loss_threshold.unwrap_or(cfg.run.threshold_fraction * initial);
    let lrs = if cfg.optimizer.lr_grid.is_empty() {
        vec![cfg.optimizer.learning_rate]
    } else {
        cfg.optimizer.lr_grid.clone()
    };
    let mut methods = Vec::new();
    for &method in &cfg.run.methods {
        let mut best: Option<RunOutput> = None;
        let mut grid = Vec::new();
        for &lr in &lrs {
            let run = train_arm(&problem, cfg, &Arm::new(method, cfg, lr), seed, StopRule::Updates(cfg.run.steps))?;
            grid.push(GridPoint {
                learning_rate: lr,
                updates_to_threshold: run.updates_to(threshold),
                best_loss: run.error.is_none().then(|| run.best_loss()),
                error: run.error.clone(),
            });
            if best.as_ref().map_or(true, |b| grid_key(&run, threshold) < grid_key(b, threshold)) {
                best = Some(run);
            }
        }
        methods.push(MethodResult { run: best.expect("at least one learning rate"), grid });
    }
    Ok(TrainReport { threshold, methods })
}

#[derive(Clone, Debug)]
pub struct AlignmentReport {
    pub dim: usize,
    pub records: Vec<RunRecord>,
    /// Number of leading updates the ratio statistics cover.
    pub window: usize,
    pub ratio_above_one: f64,
    pub ratio_geo_mean: f64,
    /// `E|cos|` of two independent random directions in the parameter space.
    pub random_abs_cos: f64,
    /// 99th percentile of `|cos|` over sampled random direction pairs.
    pub random_abs_cos_p99: f64,
    /// Mean consecutive-gradient cosine over the first tenth of the run.
    pub early_consec_cos: f64,
    pub error: Option<String>,
}

pub const ALIGNMENT_WINDOW: usize = 200;
const BASELINE_PAIRS: usize = 1000;

impl AlignmentReport {
    pub fn metrics(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "updates": self.records.len(),
            "window": self.window,
            "ratio_above_one_fraction": self.ratio_above_one,
            "ratio_geometric_mean": self.ratio_geo_mean,
            "random_abs_cos_mean": self.random_abs_cos,
            "random_abs_cos_p99": self.random_abs_cos_p99,
            "early_consec_cos_mean": self.early_consec_cos,
            "error": self.error,
        })
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_least("ratio_above_one_fraction", self.ratio_above_one, 0.9, None),
            Check {
                name: "ratio_geometric_mean".into(),
                measured: self.ratio_geo_mean,
                expected: 1.1,
                std_err: None,
                tolerance: 0.0,
                passed: self.ratio_geo_mean > 1.1,
            },
            Check {
                name: "early_consec_cos_above_random_p99".into(),
                measured: self.early_consec_cos,
                expected: self.random_abs_cos_p99,
                std_err: None,
                tolerance: 0.0,
                passed: self.early_consec_cos > self.random_abs_cos_p99,
            },
        ]
    }
}

fn random_abs_cos_p99(n: usize, seed: RngSeed) -> f64 {
    let mut rng = seed.rng();
    let mut c: Vec<f64> = (0..BASELINE_PAIRS)
        .map(|_| {
            let a = ParamVector::gaussian(n, &mut rng);
            let b = ParamVector::gaussian(n, &mut rng);
            cosine(&a, &b).map_or(0.0, f64::abs)
        })
        .collect();
    c.sort_by(f64::total_cmp);
    c[(0.99 * (BASELINE_PAIRS - 1) as f64).round() as usize]
}

/// Trains with ES updates while measuring, at every update, a fresh ES
/// estimate and a guided estimate fed by its own past estimates against the
/// exact gradient. Both estimates spend the same number of evaluations.
pub fn run_gradient_alignment(cfg: &ExperimentConfig) -> Result<AlignmentReport> {
    let seed = RngSeed(cfg.seed);
    let problem = Problem::build(cfg, seed)?;
    let es_arm = Arm::new(Method::Es, cfg, cfg.optimizer.learning_rate);
    let ours_arm = Arm::new(Method::Ours, cfg, cfg.optimizer.learning_rate);
    let mut theta = problem.initial_params(seed);
    let mut batches = problem.batches(seed)?;
    let mut optimizer = Optimizer::new(cfg.optimizer.kind, theta.len(), cfg.optimizer.learning_rate)?;
    let mut guided = IterativeEstimator::new(ours_arm.estimator.clone())?;
    let mut records = Vec::with_capacity(cfg.run.steps);
    let mut prev_grad: Option<ParamVector> = None;
    let mut error = None;
    for t in 0..cfg.run.steps {
        let start = Instant::now();
        let useed = seed.derive(streams::UPDATE).derive(t as u64);
        let step = problem.with_step(&mut batches, |f| {
            let grad = exact_gradient(f, &theta)?;
            let es = es_gradient(f, &theta, &es_arm.estimator, useed.derive(0))?;
            let ours = guided.estimate(f, &theta, useed.derive(1))?;
            if es.evals != ours.evals {
                return Err(Error::Domain(format!(
                    "budget parity violated at update {t}: ES {} vs guided {} evaluations",
                    es.evals, ours.evals
                )));
            }
            let cos_es = cosine(&es.direction, &grad).ok();
            let cos_ours = cosine(&ours.direction, &grad).ok();
            let update = optimizer.step(&mut theta, &es.direction)?;
            Ok((ours.direction, grad, cos_es, cos_ours, update))
        });
        match step.and_then(|s| problem.loss(&theta).map(|l| (s, l))) {
            Ok(((ours_dir, grad, cos_es, cos_ours, update), loss)) => {
                guided.record(ours_dir);
                let consec = prev_grad.as_ref().and_then(|p| cosine(p, &grad).ok());
                prev_grad = Some(grad);
                records.push(RunRecord {
                    step: t,
                    loss,
                    cos_es,
                    cos_ours,
                    ratio: ratio(cos_ours, cos_es),
                    consec_cos: consec,
                    update_norm: update.norm(),
                    wall_ms: cfg.report.wall_clock.then(|| start.elapsed().as_secs_f64() * 1e3),
                    seed: useed,
                });
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let window = records.len().min(ALIGNMENT_WINDOW);
    let head = &records[..window];
    let above = head.iter().filter(|r| r.ratio.is_some_and(|x| x > 1.0)).count();
    let logs: Vec<f64> = head.iter().filter_map(|r| r.ratio).map(f64::ln).collect();
    let ratio_geo_mean =
        if logs.is_empty() { f64::NAN } else { (logs.iter().sum::<f64>() / logs.len() as f64).exp() };
    let early: Vec<f64> = records[..(records.len() / 10).max(1).min(records.len())]
        .iter()
        .filter_map(|r| r.consec_cos)
        .collect();
    let dim = problem.dim();
    Ok(AlignmentReport {
        dim,
        window,
        ratio_above_one: if window == 0 { 0.0 } else { above as f64 / window as f64 },
        ratio_geo_mean,
        random_abs_cos: random_abs_cosine_mean(dim),
        random_abs_cos_p99: random_abs_cos_p99(dim, seed.derive(streams::BASELINE)),
        early_consec_cos: if early.is_empty() { f64::NAN } else { early.iter().sum::<f64>() / early.len() as f64 },
        records,
        error,
    })
}

/// One cell of the noise study.
#[derive(Clone, Debug)]
pub struct NoiseCell {
    pub noisy: bool,
    pub method: Method,
    /// Surrogate count (0 for ES).
    pub k: usize,
    pub runs: Vec<RunOutput>,
}

impl NoiseCell {
    pub fn label(&self) -> String {
        let noise = if self.noisy { "noisy" } else { "clean" };
        match self.method {
            Method::Es => format!("{noise}-es"),
            Method::Ours => format!("{noise}-ours-k{}", self.k),
        }
    }

    pub fn final_losses(&self) -> Vec<f64> {
        self.runs.iter().map(RunOutput::final_loss).collect()
    }

    /// Mean final loss and the half width of its two-sided t interval.
    pub fn interval(&self, confidence: f64) -> (f64, f64) {
        let xs = self.final_losses();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return (mean, f64::INFINITY);
        }
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        (mean, t_quantile(confidence, xs.len() - 1) * sd / n.sqrt())
    }
}

/// Two-sided Student-t critical value.
pub fn t_quantile(confidence: f64, df: usize) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1").inverse_cdf(0.5 + confidence / 2.0)
}

#[derive(Clone, Debug)]
pub struct NoiseReport {
    pub cells: Vec<NoiseCell>,
    pub confidence: f64,
    pub max_relative_gap: f64,
}

impl NoiseReport {
    pub fn cell(&self, noisy: bool, method: Method, k: usize) -> Option<&NoiseCell> {
        self.cells.iter().find(|c| c.noisy == noisy && c.method == method && c.k == k)
    }

    pub fn metrics(&self) -> serde_json::Value {
        let cells: Vec<serde_json::Value> = self
            .cells
            .iter()
            .map(|c| {
                let (mean, half) = c.interval(self.confidence);
                serde_json::json!({
                    "cell": c.label(),
                    "final_losses": c.final_losses(),
                    "mean_final_loss": mean,
                    "ci_half_width": half,
                    "total_updates": c.runs.iter().map(|r| r.records.len()).collect::<Vec<_>>(),
                    "errors": c.runs.iter().filter_map(|r| r.error.clone()).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({ "confidence": self.confidence, "cells": cells })
    }

    /// ES clean and noisy intervals overlap; guided k=1 is worse when noisy;
    /// guided k=4 stays within the relative gap.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        let pair = |m: Method, k: usize| Some((self.cell(false, m, k)?, self.cell(true, m, k)?));
        if let Some((clean, noisy)) = pair(Method::Es, 0) {
            let (mc, hc) = clean.interval(self.confidence);
            let (mn, hn) = noisy.interval(self.confidence);
            out.push(Check::at_most("es_clean_noisy_intervals_overlap", (mn - mc).abs(), hc + hn, None));
        }
        if let Some((clean, noisy)) = pair(Method::Ours, 1) {
            let (mc, _) = clean.interval(self.confidence);
            let (mn, _) = noisy.interval(self.confidence);
            out.push(Check {
                name: "ours_k1_noisy_worse".into(),
                measured: mn - mc,
                expected: 0.0,
                std_err: None,
                tolerance: 0.0,
                passed: mn > mc,
            });
        }
        if let Some((clean, noisy)) = pair(Method::Ours, 4) {
            let (mc, _) = clean.interval(self.confidence);
            let (mn, _) = noisy.interval(self.confidence);
            out.push(Check::at_most("ours_k4_relative_gap", (mn - mc).abs() / mc.abs(), self.max_relative_gap, None));
        }
        out
    }
}

/// The `{clean, noisy} x {ES, guided k ...}` grid, each cell trained from
/// the same replicate seeds for `run.steps` proper updates.
pub fn run_noise_study(cfg: &ExperimentConfig) -> Result<NoiseReport> {
    let budget = cfg.budget_directions();
    let mut arms: Vec<(Method, usize)> = vec![(Method::Es, 0)];
    arms.extend(cfg.noise.k_values.iter().map(|&k| (Method::Ours, k)));
    let mut cells = Vec::new();
    for noisy in [false, true] {
        for &(method, k) in &arms {
            let mut runs = Vec::new();
            for r in 0..cfg.run.replicates {
                let seed = RngSeed(cfg.seed).derive(streams::REPLICATE).derive(r as u64);
                let problem = Problem::build(cfg, seed)?;
                let mut c = cfg.clone();
                c.estimator.noise_permute_prob = if noisy { cfg.noise.prob } else { 0.0 };
                c.estimator.k_history = k;
                c.estimator.p_random = budget - k;
                let arm = Arm::new(method, &c, cfg.optimizer.learning_rate);
                runs.push(train_arm(&problem, &c, &arm, seed, StopRule::ProperUpdates(cfg.run.steps))?);
            }
            cells.push(NoiseCell { noisy, method, k, runs });
        }
    }
    Ok(NoiseReport { cells, confidence: cfg.noise.confidence, max_relative_gap: cfg.noise.max_relative_gap })
}
