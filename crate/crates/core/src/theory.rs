//! Closed-form convergence quantities of the iterative estimator and
//! Monte-Carlo simulators that check them.
//!
//! `X_t` is the cosine between the estimate and the true gradient at step
//! `t`. With one surrogate (the last estimate) and `P` fresh orthonormal
//! directions in `R^N`:
//!
//! * linear objective: `X_t^2 = X_{t-1}^2 + (1 - X_{t-1}^2) Q_t`, where `Q_t`
//!   is the energy a uniformly random `P`-frame captures of a fixed unit
//!   vector in `N - 1` dimensions (`E[Q_t] = P / (N - 1)`);
//! * rotating gradient with consecutive cosine `alpha`:
//!   `E[X_t^2 | x] = (alpha^2 x^2 + (1 - alpha^2)(1 - x^2)/(N-1))(1 - q) + q`,
//!   `q = P / (N - 1)`.
//!
//! Simulations run trials in parallel from per-trial derived seeds and
//! reduce in trial order, so results do not depend on the thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{guided_gradient, EstimatorConfig, SurrogateHistory};
use crate::linalg::{
    cosine, dot_unchecked, project_onto_span, sample_orthogonal_complement_with, sample_orthonormal_with,
    unit_with_cos_sq, OrthoSet, ParamVector, RngSeed,
};
use crate::objectives::LinearObjective;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Ambient dimension `N`.
    pub dim: usize,
    /// Random directions per step `P`.
    pub p_random: usize,
    /// Cosine between consecutive gradients (1 for linear objectives).
    pub alpha: f64,
    /// Hitting threshold: stop once `X_t^2 >= 1 - delta`.
    pub delta: f64,
}

impl ChainParams {
    pub fn linear(dim: usize, p_random: usize, delta: f64) -> Self {
        ChainParams { dim, p_random, alpha: 1.0, delta }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Domain(format!("chain dimension must be >= 2, got {}", self.dim)));
        }
        if self.p_random == 0 || self.p_random > self.dim - 1 {
            return Err(Error::Domain(format!("need 1 <= P <= N - 1, got P={} N={}", self.p_random, self.dim)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    /// `P / (N - 1)`
    pub fn rate(&self) -> f64 {
        self.p_random as f64 / (self.dim - 1) as f64
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, std_err: f64::NAN, count: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Estimate { mean, std_err, count: n }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within_se(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_err
    }
}

/// `E[X_t^2 - X_{t-1}^2 | X_{t-1}^2 = x_sq]` for a linear objective.
pub fn expected_drift_linear(x_sq: f64, params: &ChainParams) -> f64 {
    (1.0 - x_sq) * params.rate()
}

/// Both branches of the expected hitting-time bound and their minimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingTimeBound {
    /// `(N-1)/P * (1 - delta)/delta` (additive drift).
    pub additive: f64,
    /// `(N-1)/P * (1 + ln(1/delta))` (variable drift).
    pub variable: f64,
    pub bound: f64,
}

pub fn hitting_time_bound(params: &ChainParams) -> HittingTimeBound {
    let scale = 1.0 / params.rate();
    let d = params.delta;
    let additive = scale * (1.0 - d) / d;
    let variable = scale * (1.0 + (1.0 / d).ln());
    HittingTimeBound { additive, variable, bound: additive.min(variable) }
}

/// Additive drift: a process starting at `x0` that drops by at least `c` in
/// expectation per step hits zero after at most `x0 / c` expected steps.
pub fn additive_drift_bound(x0: f64, c: f64) -> Result<f64> {
    if !(x0 > 0.0) || !(c > 0.0) {
        return Err(Error::Domain(format!("additive drift needs x0 > 0 and c > 0, got x0={x0} c={c}")));
    }
    Ok(x0 / c)
}

/// Variable drift with `h(z) = z P/(N-1)`:
/// `1/h(1) + int_1^z0 du/h(u) = (N-1)/P (1 + ln z0)`.
pub fn variable_drift_bound(z0: f64, params: &ChainParams) -> Result<f64> {
    if !(z0 >= 1.0) {
        return Err(Error::Domain(format!("variable drift needs z0 >= 1, got {z0}")));
    }
    let inv_rate = 1.0 / params.rate();
    Ok(inv_rate + inv_rate * z0.ln())
}

/// The unique `delta*` in (0, 1) where `(1-delta)/delta = 1 + ln(1/delta)`.
pub fn bound_crossover_delta() -> f64 {
    let gap = |d: f64| (1.0 - d) / d - (1.0 + (1.0 / d).ln());
    // gap > 0 near 0, gap < 0 near 1
    bisect(gap, 1e-9, 1.0 - 1e-12)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `E[X_t^2 | X_{t-1}^2 = x_sq]` under the rotating-gradient model.
pub fn theorem2_expected(x_sq: f64, params: &ChainParams) -> f64 {
    let a2 = params.alpha * params.alpha;
    let n1 = (params.dim - 1) as f64;
    let q = params.rate();
    (a2 * x_sq + (1.0 - a2) * (1.0 - x_sq) / n1) * (1.0 - q) + q
}

/// Fixed point `A` of [`theorem2_expected`], found by bisection on
/// `theorem2_expected(x) - x` over [0, 1].
pub fn fixed_point_a(params: &ChainParams) -> Result<f64> {
    params.validate()?;
    let g = |x: f64| theorem2_expected(x, params) - x;
    let (g0, g1) = (g(0.0), g(1.0));
    if g1.abs() <= 1e-15 {
        return Ok(1.0);
    }
    if !(g0 > 0.0 && g1 < 0.0) {
        return Err(Error::Domain(format!("no fixed point in [0, 1] (g(0)={g0}, g(1)={g1})")));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed form of the fixed point, solving the affine recurrence
/// `x = (a2 x + b (1 - x))(1 - q) + q` with `b = (1 - alpha^2)/(N - 1)`:
/// `A = (b (1 - q) + q) / (1 - (a2 - b)(1 - q))`.
pub fn fixed_point_closed_form(params: &ChainParams) -> f64 {
    let a2 = params.alpha * params.alpha;
    let b = (1.0 - a2) / (params.dim - 1) as f64;
    let q = params.rate();
    (b * (1.0 - q) + q) / (1.0 - (a2 - b) * (1.0 - q))
}

/// Per-step squared cosines of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftTrace {
    pub x_sq: Vec<f64>,
}

impl DriftTrace {
    /// `Y_t = 1 - X_t^2`
    pub fn y(&self) -> Vec<f64> {
        self.x_sq.iter().map(|x| 1.0 - x).collect()
    }

    /// Rescaled process `Z_t = Y_t / delta` when `Y_t >= delta`, else 0.
    pub fn z(&self, delta: f64) -> Vec<f64> {
        self.y().into_iter().map(|y| if y >= delta { y / delta } else { 0.0 }).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.x_sq.windows(2).all(|w| w[1] >= w[0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingTimeResult {
    pub samples: Vec<usize>,
    pub mean: f64,
    pub std_err: f64,
    pub bound: f64,
}

/// Mean one-step outcome of the transitions that started in `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftBin {
    pub lo: f64,
    pub hi: f64,
    /// Measured mean (increment for linear chains, next value for rotating).
    pub measured: Estimate,
    /// Theoretical mean over the same starting points.
    pub expected: f64,
}

fn bin_transitions(
    transitions: &[(f64, f64)],
    bins: usize,
    expected: impl Fn(f64) -> f64,
) -> Vec<DriftBin> {
    let mut buckets: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 0.0); bins];
    for &(from, outcome) in transitions {
        let b = ((from * bins as f64) as usize).min(bins - 1);
        buckets[b].0.push(outcome);
        buckets[b].1 += expected(from);
    }
    buckets
        .into_iter()
        .enumerate()
        .filter(|(_, (xs, _))| !xs.is_empty())
        .map(|(i, (xs, exp_sum))| DriftBin {
            lo: i as f64 / bins as f64,
            hi: (i + 1) as f64 / bins as f64,
            expected: exp_sum / xs.len() as f64,
            measured: Estimate::from_samples(&xs),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearChainReport {
    pub hitting: HittingTimeResult,
    /// Binned one-step increments `X_t^2 - X_{t-1}^2`.
    pub drift_bins: Vec<DriftBin>,
    pub traces: Vec<DriftTrace>,
}

impl LinearChainReport {
    pub fn all_monotone(&self) -> bool {
        self.traces.iter().all(DriftTrace::is_monotone)
    }
}

const DRIFT_BINS: usize = 10;

fn step_cap(params: &ChainParams) -> usize {
    (100.0 * hitting_time_bound(params).bound).ceil() as usize + 1000
}

/// Energy captured by a fresh uniformly random `P`-frame of the fixed unit
/// vector `e_1` in `N - 1` dimensions.
fn sample_capture<R: Rng + ?Sized>(params: &ChainParams, rng: &mut R) -> Result<f64> {
    let frame = sample_orthonormal_with(params.dim - 1, params.p_random, rng)?;
    Ok(frame.iter().map(|d| d[0] * d[0]).sum())
}

fn finish_linear(params: &ChainParams, traces: Vec<DriftTrace>, times: Vec<usize>) -> LinearChainReport {
    let as_f: Vec<f64> = times.iter().map(|&t| t as f64).collect();
    let est = Estimate::from_samples(&as_f);
    let transitions: Vec<(f64, f64)> =
        traces.iter().flat_map(|t| t.x_sq.windows(2).map(|w| (w[0], w[1] - w[0])).collect::<Vec<_>>()).collect();
    let drift_bins = bin_transitions(&transitions, DRIFT_BINS, |x| expected_drift_linear(x, params));
    LinearChainReport {
        hitting: HittingTimeResult {
            samples: times,
            mean: est.mean,
            std_err: est.std_err,
            bound: hitting_time_bound(params).bound,
        },
        drift_bins,
        traces,
    }
}

/// Scalar simulation of the linear-objective cosine process until
/// `X_t^2 >= 1 - delta`.
pub fn simulate_linear_chain(
    params: &ChainParams,
    initial_x_sq: f64,
    trials: usize,
    seed: RngSeed,
) -> Result<LinearChainReport> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let cap = step_cap(params);
    let target = 1.0 - params.delta;
    let runs: Vec<(DriftTrace, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.derive(i).rng();
            let mut x = vec![initial_x_sq];
            while *x.last().expect("nonempty") < target {
                if x.len() > cap {
                    return Err(Error::Domain(format!("linear chain did not hit within {cap} steps")));
                }
                let prev = *x.last().expect("nonempty");
                let q = sample_capture(params, &mut rng)?;
                x.push(prev + (1.0 - prev) * q);
            }
            let t = x.len() - 1;
            Ok((DriftTrace { x_sq: x }, t))
        })
        .collect::<Result<_>>()?;
    let (traces, times) = runs.into_iter().unzip();
    Ok(finish_linear(params, traces, times))
}

/// The same process, driven through the guided estimator on a random linear
/// objective in `R^N` with a one-deep surrogate history.
pub fn simulate_linear_chain_concrete(params: &ChainParams, trials: usize, seed: RngSeed) -> Result<LinearChainReport> {
    params.validate()?;
    let cap = step_cap(params);
    let target = 1.0 - params.delta;
    let n = params.dim;
    let cfg = EstimatorConfig { sigma: 1.0, p_random: params.p_random, k_history: 1, ..Default::default() };
    let runs: Vec<(DriftTrace, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let trial = seed.derive(i);
            let mut rng = trial.rng();
            let c = ParamVector::gaussian(n, &mut rng);
            let f = LinearObjective::new(c.clone())?;
            let theta = vec![0.0; n];
            // step 0: no surrogate yet, P directions
            let first = crate::estimators::guided_gradient(
                &f,
                &theta,
                &OrthoSet::empty(n),
                &cfg,
                trial.derive(u64::MAX),
            )?;
            let mut hist = SurrogateHistory::new(1);
            hist.push(first.direction.clone());
            let mut x = vec![cos_sq(&first.direction, &c)];
            let mut t = 0u64;
            while *x.last().expect("nonempty") < target {
                if x.len() > cap {
                    return Err(Error::Domain(format!("linear chain did not hit within {cap} steps")));
                }
                let sur = hist.surrogates(n)?;
                let g = guided_gradient(&f, &theta, &sur, &cfg, trial.derive(t))?;
                x.push(cos_sq(&g.direction, &c));
                hist.push(g.direction);
                t += 1;
            }
            let steps = x.len() - 1;
            Ok((DriftTrace { x_sq: x }, steps))
        })
        .collect::<Result<_>>()?;
    let (traces, times) = runs.into_iter().unzip();
    Ok(finish_linear(params, traces, times))
}

fn cos_sq(a: &[f64], b: &[f64]) -> f64 {
    cosine(a, b).map(|c| c * c).unwrap_or(0.0)
}

/// One-step drift of `X^2` from a fixed `x_sq` on a linear objective,
/// measured through the guided estimator in `R^N`.
pub fn measure_linear_drift(x_sq: f64, params: &ChainParams, trials: usize, seed: RngSeed) -> Result<Estimate> {
    params.validate()?;
    let n = params.dim;
    let cfg = EstimatorConfig { sigma: 1.0, p_random: params.p_random, k_history: 1, ..Default::default() };
    let drifts: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let trial = seed.derive(i);
            let mut rng = trial.rng();
            let c = ParamVector::gaussian(n, &mut rng);
            let zeta = unit_with_cos_sq(&c, x_sq, &mut rng)?;
            let f = LinearObjective::new(c.clone())?;
            let sur = OrthoSet::from_orthonormal(n, vec![zeta])?;
            let g = guided_gradient(&f, &vec![0.0; n], &sur, &cfg, trial.derive(1))?;
            Ok(cos_sq(&g.direction, &c) - x_sq)
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&drifts))
}

/// The drift of the scalar recurrence `(1 - x^2) Q` at fixed `x_sq`.
pub fn measure_linear_drift_scalar(x_sq: f64, params: &ChainParams, trials: usize, seed: RngSeed) -> Result<Estimate> {
    params.validate()?;
    let drifts: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| Ok((1.0 - x_sq) * sample_capture(params, &mut seed.derive(i).rng())?))
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&drifts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatingChainReport {
    /// Mean `X_t^2` across trials for each step `t = 0..steps`.
    pub mean_x_sq: Vec<f64>,
    /// Binned conditional means of `X_t^2` given `X_{t-1}^2`.
    pub conditional_bins: Vec<DriftBin>,
    /// Mean `X_t^2` over `t >= burn_in`, with the standard error across trials.
    pub long_run: Estimate,
    pub burn_in: usize,
}

const CONDITIONAL_BINS: usize = 20;

/// Unit vector `alpha g + sqrt(1 - alpha^2) u` with `u` uniform among unit
/// vectors orthogonal to the unit vector `g`.
fn rotate_gradient<R: Rng + ?Sized>(g: &ParamVector, alpha: f64, rng: &mut R) -> Result<ParamVector> {
    unit_with_cos_sq(g, alpha * alpha, rng)
}

/// One step of the iterative scheme with the last estimate as sole surrogate
/// on a linear objective with gradient `grad`.
fn guided_step(grad: &ParamVector, zeta_hat: &ParamVector, p: usize, seed: RngSeed) -> Result<ParamVector> {
    let n = grad.len();
    let f = LinearObjective::new(grad.clone())?;
    let cfg = EstimatorConfig { sigma: 1.0, p_random: p, k_history: 1, ..Default::default() };
    let sur = OrthoSet::from_orthonormal(n, vec![zeta_hat.clone()])?;
    Ok(guided_gradient(&f, &vec![0.0; n], &sur, &cfg, seed)?.direction)
}

/// Simulates the rotating-gradient model with explicit vectors in `R^N`.
///
/// Each step rotates the unit gradient by an angle with cosine `alpha`
/// towards a random orthogonal direction, then applies the guided estimator
/// with the previous estimate as surrogate. `X_0` comes from a surrogate-free
/// estimate with `P` random directions.
pub fn simulate_rotating_chain(
    params: &ChainParams,
    steps: usize,
    trials: usize,
    burn_in: usize,
    seed: RngSeed,
) -> Result<RotatingChainReport> {
    params.validate()?;
    if steps == 0 || trials == 0 || burn_in >= steps {
        return Err(Error::Domain("need steps >= 1, trials >= 1 and burn_in < steps".into()));
    }
    let n = params.dim;
    let p = params.p_random;
    let runs: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let trial = seed.derive(i);
            let mut rng = trial.rng();
            let mut grad = ParamVector::gaussian(n, &mut rng).normalized()?;
            let frame = sample_orthonormal_with(n, p, &mut rng)?;
            let mut zeta = project_onto_span(&grad, &frame)?;
            let mut xs = Vec::with_capacity(steps + 1);
            xs.push(cos_sq(&zeta, &grad));
            for t in 0..steps as u64 {
                grad = rotate_gradient(&grad, params.alpha, &mut rng)?;
                let zeta_hat = match zeta.normalized() {
                    Ok(z) => z,
                    Err(_) => ParamVector::gaussian(n, &mut rng).normalized()?,
                };
                zeta = guided_step(&grad, &zeta_hat, p, trial.derive(t))?;
                xs.push(cos_sq(&zeta, &grad));
            }
            Ok(xs)
        })
        .collect::<Result<_>>()?;

    let mean_x_sq: Vec<f64> =
        (0..=steps).map(|t| runs.iter().map(|r| r[t]).sum::<f64>() / trials as f64).collect();
    let transitions: Vec<(f64, f64)> =
        runs.iter().flat_map(|r| r.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>()).collect();
    let conditional_bins = bin_transitions(&transitions, CONDITIONAL_BINS, |x| theorem2_expected(x, params));
    let per_trial: Vec<f64> =
        runs.iter().map(|r| r[burn_in..].iter().sum::<f64>() / (r.len() - burn_in) as f64).collect();
    let long_run = Estimate::from_samples(&per_trial);
    Ok(RotatingChainReport { mean_x_sq, conditional_bins, long_run, burn_in })
}

/// One-step drift of `X^2` from a fixed `x_sq` under the rotating model.
pub fn measure_rotating_drift(x_sq: f64, params: &ChainParams, trials: usize, seed: RngSeed) -> Result<Estimate> {
    params.validate()?;
    let n = params.dim;
    let drifts: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let trial = seed.derive(i);
            let mut rng = trial.rng();
            let prev = ParamVector::gaussian(n, &mut rng).normalized()?;
            let zeta_hat = unit_with_cos_sq(&prev, x_sq, &mut rng)?;
            let grad = rotate_gradient(&prev, params.alpha, &mut rng)?;
            let zeta = guided_step(&grad, &zeta_hat, params.p_random, trial.derive(1))?;
            Ok(cos_sq(&zeta, &grad) - x_sq)
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&drifts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    /// Cosine of the candidate with the gradient.
    pub candidate_cos: f64,
    /// Best cosine among the random span members.
    pub best_random_cos: f64,
    /// `max(0, best_random_cos - candidate_cos)`
    pub max_excess: f64,
    pub trials: usize,
    pub passed: bool,
}

/// Tolerance for a random span member beating the candidate.
pub const OPTIMALITY_TOL: f64 = 1e-9;

/// Samples `trials` Gaussian combinations of `span` and reports whether any
/// is better aligned with `grad` than `candidate`.
pub fn optimality_check_candidate(
    grad: &[f64],
    candidate: &[f64],
    span: &OrthoSet,
    trials: usize,
    seed: RngSeed,
) -> Result<OptimalityReport> {
    let m = span.len();
    let cos_of = |w: &[f64]| cosine(w, grad).unwrap_or(0.0);
    let candidate_cos = if crate::linalg::norm(candidate) == 0.0 { 0.0 } else { cos_of(candidate) };
    let mut rng = seed.rng();
    // coefficients of grad in the span give <grad, w> without forming w
    let gc = span.coefficients(grad)?;
    let gnorm = crate::linalg::norm(grad);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..trials {
        let a: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let an = crate::linalg::norm(&a);
        let c = if an == 0.0 || gnorm == 0.0 { 0.0 } else { dot_unchecked(&a, &gc) / (an * gnorm) };
        best = best.max(c);
    }
    let max_excess = (best - candidate_cos).max(0.0);
    Ok(OptimalityReport {
        candidate_cos,
        best_random_cos: best,
        max_excess,
        trials,
        passed: max_excess <= OPTIMALITY_TOL,
    })
}

/// Optimality of the projection of `grad` onto `surrogates` and `dirs`
/// jointly, against random members of their span.
pub fn optimality_check(
    grad: &[f64],
    surrogates: &OrthoSet,
    dirs: &OrthoSet,
    trials: usize,
    seed: RngSeed,
) -> Result<OptimalityReport> {
    let span = surrogates.concat(dirs)?;
    let g_our = project_onto_span(grad, &span)?;
    optimality_check_candidate(grad, &g_our, &span, trials, seed)
}

/// Mean energy `sum_i <u, d_i>^2` that `p` uniformly random orthonormal
/// directions, constrained orthogonal to `constraint`, capture of the unit
/// vector `u`.
pub fn captured_energy(constraint: &OrthoSet, p: usize, u: &[f64], draws: usize, seed: RngSeed) -> Result<Estimate> {
    let uhat = ParamVector::from(u).normalized()?;
    let xs: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let frame = sample_orthogonal_complement_with(constraint, p, &mut seed.derive(i).rng())?;
            Ok(frame.coefficients(&uhat)?.iter().map(|c| c * c).sum())
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&xs))
}

/// Random unit vector in `R^n`.
pub fn random_unit(n: usize, seed: RngSeed) -> Result<ParamVector> {
    ParamVector::gaussian(n, &mut seed.rng()).normalized()
}

/// Expected |cos| between two independent uniform unit vectors in `R^n`:
/// `Gamma(n/2) / (sqrt(pi) Gamma((n+1)/2))`.
pub fn random_abs_cosine_mean(n: usize) -> f64 {
    // r_{k+2} = r_k * k / (k + 1), from r_1 = 1 and r_2 = 2 / pi
    let (mut ratio, mut k) = if n % 2 == 0 { (2.0 / std::f64::consts::PI, 2) } else { (1.0, 1) };
    while k < n {
        ratio *= k as f64 / (k + 1) as f64;
        k += 2;
    }
    ratio
}

/// Checks the hitting-time bound on the linear chain.
pub fn hitting_time_check(params: &ChainParams, trials: usize, seed: RngSeed) -> Result<HittingTimeResult> {
    Ok(simulate_linear_chain(params, 0.0, trials, seed)?.hitting)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, pr: usize, alpha: f64, delta: f64) -> ChainParams {
        ChainParams { dim: n, p_random: pr, alpha, delta }
    }

    #[test]
    fn drift_formula_examples() {
        let c = p(101, 10, 1.0, 0.1);
        assert!((expected_drift_linear(0.0, &c) - 0.1).abs() < 1e-15);
        assert_eq!(expected_drift_linear(1.0, &c), 0.0);
        assert!((expected_drift_linear(0.5, &c) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn hitting_bound_examples() {
        let b = hitting_time_bound(&p(101, 10, 1.0, 0.5));
        assert!((b.bound - 10.0).abs() < 1e-12);
        assert!((b.additive - 10.0).abs() < 1e-12);
        assert!((b.variable - 10.0 * (1.0 + 2f64.ln())).abs() < 1e-12);
        let b = hitting_time_bound(&p(101, 10, 1.0, 0.01));
        assert!((b.bound - 10.0 * (1.0 + 100f64.ln())).abs() < 1e-12);
        assert!((b.bound - 56.0517).abs() < 1e-4);
        let b = hitting_time_bound(&p(101, 10, 1.0, 0.1));
        assert!((b.bound - 33.0259).abs() < 1e-4);
    }

    #[test]
    fn drift_theorem_bounds() {
        assert!((additive_drift_bound(0.9, 0.09).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(additive_drift_bound(1.0, 1.0).unwrap(), 1.0);
        assert!(additive_drift_bound(0.0, 1.0).is_err());
        // additive drift with x0 = 1 - delta, c = delta P/(N-1) is the first branch
        for delta in [0.5, 0.1, 0.01] {
            let c = p(101, 10, 1.0, delta);
            let add = additive_drift_bound(1.0 - delta, delta * c.rate()).unwrap();
            assert!((add - hitting_time_bound(&c).additive).abs() < 1e-9);
            let var = variable_drift_bound(1.0 / delta, &c).unwrap();
            assert!((var - hitting_time_bound(&c).variable).abs() < 1e-9);
        }
        let c = p(101, 10, 1.0, 0.1);
        assert!((variable_drift_bound(1.0, &c).unwrap() - 10.0).abs() < 1e-12);
        assert!((variable_drift_bound(10.0, &c).unwrap() - 33.0259).abs() < 1e-4);
        let unit = p(11, 10, 1.0, 0.1);
        assert!((variable_drift_bound(std::f64::consts::E, &unit).unwrap() - 2.0).abs() < 1e-12);
        assert!(variable_drift_bound(0.5, &c).is_err());
    }

    #[test]
    fn variable_drift_integral_matches_quadrature() {
        let c = p(51, 5, 1.0, 0.1);
        let z0 = 37.0;
        let h = |z: f64| z * c.rate();
        let m = 200_000;
        let dz = (z0 - 1.0) / m as f64;
        let integral: f64 = (0..m).map(|i| dz / h(1.0 + (i as f64 + 0.5) * dz)).sum();
        let quad = 1.0 / h(1.0) + integral;
        assert!((quad - variable_drift_bound(z0, &c).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn bound_branches_cross_once() {
        let star = bound_crossover_delta();
        assert!(star > 0.0 && star < 1.0);
        let add = |d: f64| (1.0 - d) / d;
        let var = |d: f64| 1.0 + (1.0 / d).ln();
        assert!((add(star) - var(star)).abs() < 1e-9);
        let mut sign_changes = 0;
        let mut prev = add(1e-4) - var(1e-4);
        for i in 2..10_000 {
            let d = i as f64 * 1e-4;
            let g = add(d) - var(d);
            if (g > 0.0) != (prev > 0.0) {
                sign_changes += 1;
            }
            if d > star + 1e-3 {
                assert!(add(d) < var(d));
            }
            if d < star - 1e-3 {
                assert!(var(d) < add(d));
            }
            prev = g;
        }
        assert_eq!(sign_changes, 1);
    }

    #[test]
    fn rotating_expectation_examples() {
        let lin = p(101, 10, 1.0, 0.1);
        for x in [0.0, 0.2, 0.7, 1.0] {
            assert!((theorem2_expected(x, &lin) - x - expected_drift_linear(x, &lin)).abs() < 1e-15);
        }
        assert!((theorem2_expected(1.0, &lin) - 1.0).abs() < 1e-15);
        let zero = p(101, 10, 0.0, 0.1);
        assert!((theorem2_expected(0.25, &zero) - 0.10675).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(fixed_point_a(&p(101, 10, 1.0, 0.1)).unwrap(), 1.0);
        assert!((fixed_point_a(&p(11, 10, 0.3, 0.1)).unwrap() - 1.0).abs() < 1e-12);
        let c = p(101, 10, 0.95, 0.1);
        let a = fixed_point_a(&c).unwrap();
        assert!((theorem2_expected(a, &c) - a).abs() < 1e-10);
        // hand evaluation of the affine fixed point:
        // b = 0.0975/100, q = 0.1, A = (0.9 b + 0.1) / (1 - 0.9 (0.9025 - b))
        let b = 0.0975 / 100.0;
        let hand = (0.9 * b + 0.1) / (1.0 - 0.9 * (0.9025 - b));
        assert!((a - hand).abs() < 1e-10);
        assert!((a - 0.534797).abs() < 1e-6);
        assert!((fixed_point_closed_form(&c) - a).abs() < 1e-10);
        for alpha in [0.0, 0.3, 0.8, 0.99] {
            let c = p(51, 3, alpha, 0.1);
            assert!((fixed_point_closed_form(&c) - fixed_point_a(&c).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_chain_starting_aligned_hits_immediately() {
        let r = simulate_linear_chain(&p(101, 10, 1.0, 0.1), 1.0, 50, RngSeed(1)).unwrap();
        assert!(r.hitting.samples.iter().all(|&t| t == 0));
    }

    #[test]
    fn linear_chain_is_monotone_and_within_bound() {
        let c = p(51, 5, 1.0, 0.1);
        let r = simulate_linear_chain(&c, 0.0, 300, RngSeed(2)).unwrap();
        assert!(r.all_monotone());
        assert!(r.hitting.mean <= r.hitting.bound);
        for tr in &r.traces {
            for (x, y) in tr.x_sq.iter().zip(tr.y()) {
                assert_eq!(x + y, 1.0);
            }
            assert!(tr.z(0.1).iter().all(|&z| z == 0.0 || z >= 1.0));
        }
    }

    #[test]
    fn scalar_and_concrete_chains_agree() {
        let c = p(41, 4, 1.0, 0.1);
        let a = simulate_linear_chain(&c, 0.0, 400, RngSeed(3)).unwrap().hitting;
        let b = simulate_linear_chain_concrete(&c, 400, RngSeed(4)).unwrap().hitting;
        let se = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
        // the concrete chain starts from a P-direction estimate rather than
        // X_0 = 0, which saves roughly one step
        assert!((a.mean - b.mean).abs() < 1.0 + 4.0 * se, "{} vs {}", a.mean, b.mean);
    }

    #[test]
    fn scalar_drift_matches_formula() {
        let c = p(101, 10, 1.0, 0.1);
        for x in [0.0, 0.5] {
            let e = measure_linear_drift_scalar(x, &c, 5000, RngSeed(7)).unwrap();
            assert!(e.within_se(expected_drift_linear(x, &c), 3.0), "{e:?}");
        }
    }

    #[test]
    fn alpha_one_rotation_reduces_to_linear() {
        let c = p(41, 4, 1.0, 0.1);
        let rot = simulate_rotating_chain(&c, 15, 400, 5, RngSeed(5)).unwrap();
        let lin = simulate_linear_chain_concrete(&c, 400, RngSeed(6)).unwrap();
        for t in [3usize, 8] {
            let lin_x: Vec<f64> = lin.traces.iter().map(|tr| *tr.x_sq.get(t).unwrap_or(tr.x_sq.last().unwrap())).collect();
            let lin_mean = Estimate::from_samples(&lin_x);
            // traces stop at the hitting time, after which X^2 only grows; compare loosely
            assert!((rot.mean_x_sq[t] - lin_mean.mean).abs() < 0.05, "t={t}: {} vs {}", rot.mean_x_sq[t], lin_mean.mean);
        }
    }

    #[test]
    fn optimality_examples() {
        let n = 8;
        let sur = OrthoSet::from_orthonormal(n, vec![ParamVector::unit(n, 0)]).unwrap();
        let dirs = OrthoSet::from_orthonormal(n, vec![ParamVector::unit(n, 1), ParamVector::unit(n, 2)]).unwrap();
        let in_span = [1.0, -2.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        let r = optimality_check(&in_span, &sur, &dirs, 2000, RngSeed(1)).unwrap();
        assert!(r.passed);
        assert!((r.candidate_cos - 1.0).abs() < 1e-12);
        let orth = [0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0];
        let r = optimality_check(&orth, &sur, &dirs, 2000, RngSeed(1)).unwrap();
        assert!(r.passed);
        assert_eq!(r.candidate_cos, 0.0);
        assert!(r.best_random_cos.abs() < 1e-12);

        let n = 32;
        let mut rng = RngSeed(2).rng();
        let grad = ParamVector::gaussian(n, &mut rng);
        let sur = sample_orthonormal_with(n, 2, &mut rng).unwrap();
        let dirs = sample_orthogonal_complement_with(&sur, 6, &mut rng).unwrap();
        let r = optimality_check(&grad, &sur, &dirs, 10_000, RngSeed(3)).unwrap();
        assert!(r.passed && r.max_excess <= 1e-9);
        // a deliberately worse candidate is caught
        let bad = sur.directions()[0].clone();
        let span = sur.concat(&dirs).unwrap();
        assert!(!optimality_check_candidate(&grad, &bad, &span, 10_000, RngSeed(3)).unwrap().passed);
    }

    #[test]
    fn random_abs_cosine_reference() {
        assert_eq!(random_abs_cosine_mean(1), 1.0);
        assert!((random_abs_cosine_mean(2) - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((random_abs_cosine_mean(3) - 0.5).abs() < 1e-15);
        let n = 500;
        assert!((random_abs_cosine_mean(n) - (2.0 / (std::f64::consts::PI * n as f64)).sqrt()).abs() < 1e-4);
    }
}
