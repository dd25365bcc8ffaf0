//! Gradient estimators built from antithetic objective evaluations.
//!
//! * [`es_gradient`]: plain antithetic ES over raw Gaussian directions,
//!   averaged with a `1/P` factor.
//! * [`guided_gradient`]: surrogate directions plus random directions drawn
//!   from their orthogonal complement. With an orthonormal search set each
//!   antithetic coefficient is the gradient's component along its direction,
//!   so the weighted sum is the projection of the gradient onto the searched
//!   subspace and needs no normalization.
//! * [`iterative_step`] / [`IterativeEstimator`]: the guided estimator fed
//!   with the last `k` parameter updates as surrogates.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    axpy, check_dims, gram_schmidt, sample_orthogonal_complement, OrthoSet, ParamVector, RngSeed, DROP_TOL,
    ORTHOGONALITY_TOL,
};
use crate::objectives::Objective;
use crate::optimizers::fitness_shape;

/// Stored history directions shorter than this are discarded.
pub const MIN_HISTORY_NORM: f64 = 1e-12;

const DIRECTION_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Perturbation scale.
    pub sigma: f64,
    /// Random search directions per update.
    pub p_random: usize,
    /// Number of past updates used as surrogates.
    pub k_history: usize,
    /// Probability that an update's coefficients are randomly permuted.
    pub noise_permute_prob: f64,
    /// Replace raw coefficients by centered ranks.
    pub fitness_shaping: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { sigma: 1e-3, p_random: 126, k_history: 1, noise_permute_prob: 0.0, fitness_shaping: false }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be positive and finite, got {}", self.sigma)));
        }
        if self.k_history + self.p_random == 0 {
            return Err(Error::Config("k_history + p_random must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_permute_prob) {
            return Err(Error::Config(format!(
                "noise_permute_prob must lie in [0, 1], got {}",
                self.noise_permute_prob
            )));
        }
        Ok(())
    }

    /// Antithetic evaluations per update: `2 (k + P)`.
    pub fn evals_per_update(&self) -> usize {
        2 * (self.k_history + self.p_random)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    /// Unnormalized gradient estimate.
    pub direction: ParamVector,
    /// Applied coefficient of each (orthonormalized) surrogate direction.
    pub surrogate_coeffs: Vec<f64>,
    /// Applied coefficient of each random direction.
    pub random_coeffs: Vec<f64>,
    /// Objective calls spent.
    pub evals: usize,
    /// Whether fitness-permutation noise hit this update.
    pub permuted: bool,
}

fn antithetic_difference<F: Objective + ?Sized>(f: &F, theta: &[f64], sigma: f64, d: &[f64]) -> Result<f64> {
    let mut x = theta.to_vec();
    axpy(sigma, d, &mut x);
    let up = f.value(&x);
    if !up.is_finite() {
        return Err(Error::Evaluation { value: up, point: x });
    }
    x.copy_from_slice(theta);
    axpy(-sigma, d, &mut x);
    let down = f.value(&x);
    if !down.is_finite() {
        return Err(Error::Evaluation { value: down, point: x });
    }
    Ok((up - down) / (2.0 * sigma))
}

/// `(f(theta + sigma d) - f(theta - sigma d)) / (2 sigma)` for a unit `d`.
pub fn directional_coefficient<F: Objective + ?Sized>(f: &F, theta: &[f64], sigma: f64, d: &[f64]) -> Result<f64> {
    check_dims(f.dim(), theta.len())?;
    check_dims(f.dim(), d.len())?;
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if (crate::linalg::norm(d) - 1.0).abs() > ORTHOGONALITY_TOL {
        return Err(Error::DegenerateVector("direction must be unit norm"));
    }
    antithetic_difference(f, theta, sigma, d)
}

/// Antithetic coefficients for all directions. Evaluations run on the current
/// rayon pool; results come back in direction order.
fn coefficients<F: Objective + ?Sized>(f: &F, theta: &[f64], sigma: f64, dirs: &[&ParamVector]) -> Result<Vec<f64>> {
    dirs.par_iter().map(|d| antithetic_difference(f, theta, sigma, d)).collect()
}

/// Uniform random permutation of `coeffs` when `active`, identity otherwise.
pub fn permute_fitness<R: Rng + ?Sized>(coeffs: &[f64], active: bool, rng: &mut R) -> Vec<f64> {
    let mut out = coeffs.to_vec();
    if active {
        out.shuffle(rng);
    }
    out
}

/// Fitness shaping then (with probability `noise_permute_prob`) permutation.
fn postprocess(coeffs: Vec<f64>, cfg: &EstimatorConfig, seed: RngSeed) -> (Vec<f64>, bool) {
    let coeffs = if cfg.fitness_shaping { fitness_shape(&coeffs) } else { coeffs };
    if cfg.noise_permute_prob <= 0.0 {
        return (coeffs, false);
    }
    let mut rng = seed.derive(NOISE_STREAM).rng();
    let active = rng.gen::<f64>() < cfg.noise_permute_prob;
    (permute_fitness(&coeffs, active, &mut rng), active)
}

/// Antithetic ES estimate with `cfg.p_random` raw Gaussian directions.
pub fn es_gradient<F: Objective + ?Sized>(
    f: &F,
    theta: &[f64],
    cfg: &EstimatorConfig,
    seed: RngSeed,
) -> Result<GradientEstimate> {
    cfg.validate()?;
    check_dims(f.dim(), theta.len())?;
    let p = cfg.p_random;
    if p == 0 {
        return Err(Error::Config("ES needs at least one search direction".into()));
    }
    let n = theta.len();
    let mut rng = seed.derive(DIRECTION_STREAM).rng();
    let eps: Vec<ParamVector> = (0..p).map(|_| ParamVector::gaussian(n, &mut rng)).collect();
    let refs: Vec<&ParamVector> = eps.iter().collect();
    let raw = coefficients(f, theta, cfg.sigma, &refs)?;
    let (coeffs, permuted) = postprocess(raw, cfg, seed);
    let mut direction = ParamVector::zeros(n);
    let inv_p = 1.0 / p as f64;
    for (c, e) in coeffs.iter().zip(&eps) {
        axpy(c * inv_p, e, &mut direction);
    }
    Ok(GradientEstimate { direction, surrogate_coeffs: Vec::new(), random_coeffs: coeffs, evals: 2 * p, permuted })
}

/// Guided estimate: every surrogate plus `cfg.p_random` random directions
/// from the orthogonal complement of the surrogates.
pub fn guided_gradient<F: Objective + ?Sized>(
    f: &F,
    theta: &[f64],
    surrogates: &OrthoSet,
    cfg: &EstimatorConfig,
    seed: RngSeed,
) -> Result<GradientEstimate> {
    cfg.validate()?;
    check_dims(f.dim(), theta.len())?;
    check_dims(f.dim(), surrogates.dim())?;
    let n = theta.len();
    if surrogates.len() + cfg.p_random > n {
        return Err(Error::SubspaceTooSmall { requested: surrogates.len() + cfg.p_random, available: n });
    }
    let randoms = if cfg.p_random > 0 {
        sample_orthogonal_complement(surrogates, cfg.p_random, seed.derive(DIRECTION_STREAM))?
    } else {
        OrthoSet::empty(n)
    };
    combine_guided(f, theta, surrogates, &randoms, cfg, seed)
}

/// Guided estimate over explicitly given random directions. The union of
/// `surrogates` and `randoms` must be orthonormal.
pub fn guided_gradient_in_span<F: Objective + ?Sized>(
    f: &F,
    theta: &[f64],
    surrogates: &OrthoSet,
    randoms: &OrthoSet,
    cfg: &EstimatorConfig,
    seed: RngSeed,
) -> Result<GradientEstimate> {
    cfg.validate()?;
    check_dims(f.dim(), theta.len())?;
    surrogates.concat(randoms)?;
    combine_guided(f, theta, surrogates, randoms, cfg, seed)
}

fn combine_guided<F: Objective + ?Sized>(
    f: &F,
    theta: &[f64],
    surrogates: &OrthoSet,
    randoms: &OrthoSet,
    cfg: &EstimatorConfig,
    seed: RngSeed,
) -> Result<GradientEstimate> {
    let dirs: Vec<&ParamVector> = surrogates.iter().chain(randoms.iter()).collect();
    let raw = coefficients(f, theta, cfg.sigma, &dirs)?;
    let (coeffs, permuted) = postprocess(raw, cfg, seed);
    let mut direction = ParamVector::zeros(theta.len());
    for (c, d) in coeffs.iter().zip(&dirs) {
        axpy(*c, d, &mut direction);
    }
    let mut surrogate_coeffs = coeffs;
    let random_coeffs = surrogate_coeffs.split_off(surrogates.len());
    Ok(GradientEstimate { direction, surrogate_coeffs, random_coeffs, evals: 2 * dirs.len(), permuted })
}

/// The last `k` update steps, newest first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurrogateHistory {
    capacity: usize,
    past: VecDeque<ParamVector>,
}

impl SurrogateHistory {
    pub fn new(capacity: usize) -> Self {
        SurrogateHistory { capacity, past: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.past.len()
    }

    pub fn is_empty(&self) -> bool {
        self.past.is_empty()
    }

    /// Stored directions, newest first.
    pub fn directions(&self) -> impl Iterator<Item = &ParamVector> {
        self.past.iter()
    }

    /// Records `step` as the newest entry unless it is (nearly) zero.
    /// Returns whether it was stored.
    pub fn push(&mut self, step: ParamVector) -> bool {
        if self.capacity == 0 || !(step.norm() >= MIN_HISTORY_NORM) {
            return false;
        }
        self.past.push_front(step);
        self.past.truncate(self.capacity);
        true
    }

    /// Orthonormalized surrogates, newest direction first.
    pub fn surrogates(&self, dim: usize) -> Result<OrthoSet> {
        let past: Vec<ParamVector> = self.past.iter().cloned().collect();
        Ok(gram_schmidt(dim, &past, DROP_TOL)?.set)
    }
}

/// Guided estimator that keeps its own surrogate history.
///
/// History slots that are empty or lost to orthonormalization are recycled
/// into extra random directions, so every call spends `2 (k + P)` evaluations.
#[derive(Clone, Debug)]
pub struct IterativeEstimator {
    cfg: EstimatorConfig,
    history: SurrogateHistory,
}

impl IterativeEstimator {
    pub fn new(cfg: EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        let history = SurrogateHistory::new(cfg.k_history);
        Ok(IterativeEstimator { cfg, history })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn history(&self) -> &SurrogateHistory {
        &self.history
    }

    pub fn estimate<F: Objective + ?Sized>(&self, f: &F, theta: &[f64], seed: RngSeed) -> Result<GradientEstimate> {
        let n = theta.len();
        let surrogates = self.history.surrogates(n)?;
        let recycled = self.cfg.k_history.saturating_sub(surrogates.len());
        let p_effective = (self.cfg.p_random + recycled).min(n - surrogates.len());
        let cfg = EstimatorConfig { p_random: p_effective, ..self.cfg.clone() };
        if surrogates.is_empty() && p_effective == 0 {
            return Err(Error::Config("no search directions available".into()));
        }
        guided_gradient(f, theta, &surrogates, &cfg, seed)
    }

    /// Stores a parameter update (or raw estimate) as the newest surrogate.
    pub fn record(&mut self, step: ParamVector) -> bool {
        self.history.push(step)
    }
}

/// One update of the iterative scheme: estimate with the orthonormalized
/// history as surrogates, then push the new estimate onto the history.
pub fn iterative_step<F: Objective + ?Sized>(
    hist: &SurrogateHistory,
    f: &F,
    theta: &[f64],
    cfg: &EstimatorConfig,
    seed: RngSeed,
) -> Result<(GradientEstimate, SurrogateHistory)> {
    let mut est = IterativeEstimator::new(cfg.clone())?;
    est.history = hist.clone();
    est.history.capacity = cfg.k_history;
    est.history.past.truncate(cfg.k_history);
    let g = est.estimate(f, theta, seed)?;
    est.record(g.direction.clone());
    Ok((g, est.history))
}
