//! Fully connected classifier with tanh hidden layers, a linear output layer
//! and mean softmax cross-entropy loss.
//!
//! Flat parameter layout, per layer in order: the `fan_out x fan_in` weight
//! matrix row-major, followed by the `fan_out` biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{Error, Result};
use crate::linalg::{check_dims, dot_unchecked, ParamVector, RngSeed};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// `(inputs, hidden..., classes)`
    pub layer_sizes: Vec<usize>,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        let spec = MlpSpec { layer_sizes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config(format!(
                "MLP needs at least an input and an output layer of nonzero width, got {:?}",
                self.layer_sizes
            )));
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn classes(&self) -> usize {
        *self.layer_sizes.last().expect("validated spec")
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// `(fan_in, fan_out, offset)` of each layer in the flat vector.
    fn layout(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.layer_sizes.windows(2).map(move |w| {
            let here = offset;
            offset += (w[0] + 1) * w[1];
            (w[0], w[1], here)
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major `fan_out x fan_in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<LayerParams>,
}

pub fn flatten_params(spec: &MlpSpec, params: &MlpParams) -> Result<ParamVector> {
    check_dims(spec.num_layers(), params.layers.len())?;
    let mut flat = Vec::with_capacity(spec.param_count());
    for ((fan_in, fan_out, _), layer) in spec.layout().zip(&params.layers) {
        check_dims(fan_in * fan_out, layer.weights.len())?;
        check_dims(fan_out, layer.bias.len())?;
        flat.extend_from_slice(&layer.weights);
        flat.extend_from_slice(&layer.bias);
    }
    Ok(flat.into())
}

pub fn unflatten_params(spec: &MlpSpec, flat: &[f64]) -> Result<MlpParams> {
    check_dims(spec.param_count(), flat.len())?;
    let layers = spec
        .layout()
        .map(|(fan_in, fan_out, off)| {
            let w_end = off + fan_in * fan_out;
            LayerParams {
                fan_in,
                fan_out,
                weights: flat[off..w_end].to_vec(),
                bias: flat[w_end..w_end + fan_out].to_vec(),
            }
        })
        .collect();
    Ok(MlpParams { layers })
}

/// Weights uniform in `+-1/sqrt(fan_in)`, biases zero.
pub fn init_params(spec: &MlpSpec, seed: RngSeed) -> ParamVector {
    let mut rng = seed.rng();
    let mut flat = Vec::with_capacity(spec.param_count());
    for (fan_in, fan_out, _) in spec.layout() {
        let bound = 1.0 / (fan_in as f64).sqrt();
        flat.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)));
        flat.extend(std::iter::repeat(0.0).take(fan_out));
    }
    flat.into()
}

/// Row-major feature matrix with its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub features: Vec<f64>,
    pub feature_dim: usize,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }
}

/// Hidden-layer activation. Matches `f64::tanh` to a few ulp of 1 in
/// absolute terms, which is all the loss sees, at about a third of the cost.
#[inline]
fn tanh(x: f64) -> f64 {
    1.0 - 2.0 / ((2.0 * x).exp() + 1.0)
}

/// Mean negative log-likelihood of an MLP over a fixed batch.
#[derive(Clone, Debug)]
pub struct MlpObjective<'a> {
    spec: MlpSpec,
    batch: &'a Batch,
}

impl<'a> MlpObjective<'a> {
    pub fn new(spec: &MlpSpec, batch: &'a Batch) -> Result<Self> {
        spec.validate()?;
        if batch.feature_dim != spec.inputs() {
            return Err(Error::DimensionMismatch { expected: spec.inputs(), found: batch.feature_dim });
        }
        check_dims(batch.labels.len() * batch.feature_dim, batch.features.len())?;
        if batch.is_empty() {
            return Err(Error::Domain("MLP objective needs a nonempty batch".into()));
        }
        if let Some((index, &label)) = batch.labels.iter().enumerate().find(|(_, &l)| l >= spec.classes()) {
            return Err(Error::LabelOutOfRange { index, label, num_classes: spec.classes() });
        }
        Ok(MlpObjective { spec: spec.clone(), batch })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    /// Activations of every layer for one sample; the last entry holds logits.
    fn forward(&self, theta: &[f64], x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.clear();
        acts.push(x.to_vec());
        let last = self.spec.num_layers() - 1;
        for (l, (fan_in, fan_out, off)) in self.spec.layout().enumerate() {
            let w = &theta[off..off + fan_in * fan_out];
            let b = &theta[off + fan_in * fan_out..off + (fan_in + 1) * fan_out];
            let input = &acts[l];
            let out: Vec<f64> = (0..fan_out)
                .map(|j| {
                    let z = b[j] + dot_unchecked(&w[j * fan_in..(j + 1) * fan_in], input);
                    if l == last {
                        z
                    } else {
                        tanh(z)
                    }
                })
                .collect();
            acts.push(out);
        }
    }

    fn log_softmax_nll(logits: &[f64], label: usize) -> f64 {
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        lse - logits[label]
    }

    /// Logits of every batch row, row-major, computed layer by layer.
    fn batch_logits(&self, theta: &[f64]) -> Vec<f64> {
        let rows = self.batch.len();
        let last = self.spec.num_layers() - 1;
        let mut cur = Vec::new();
        let mut next = Vec::new();
        for (l, (fan_in, fan_out, off)) in self.spec.layout().enumerate() {
            let w = &theta[off..off + fan_in * fan_out];
            let b = &theta[off + fan_in * fan_out..off + (fan_in + 1) * fan_out];
            let input: &[f64] = if l == 0 { &self.batch.features } else { &cur };
            next.clear();
            next.resize(rows * fan_out, 0.0);
            for (x, z) in input.chunks_exact(fan_in).zip(next.chunks_exact_mut(fan_out)) {
                for (j, zj) in z.iter_mut().enumerate() {
                    *zj = b[j] + dot_unchecked(&w[j * fan_in..(j + 1) * fan_in], x);
                }
            }
            if l != last {
                next.iter_mut().for_each(|z| *z = tanh(*z));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Fraction of batch rows classified correctly.
    pub fn accuracy(&self, theta: &[f64]) -> f64 {
        let mut acts = Vec::new();
        let correct = (0..self.batch.len())
            .filter(|&i| {
                self.forward(theta, self.batch.row(i), &mut acts);
                let logits = acts.last().expect("output layer");
                let arg = logits
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (j, &z)| if z > best.1 { (j, z) } else { best })
                    .0;
                arg == self.batch.labels[i]
            })
            .count();
        correct as f64 / self.batch.len() as f64
    }
}

impl Objective for MlpObjective<'_> {
    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        assert_eq!(theta.len(), self.dim(), "parameter vector length");
        let classes = self.spec.classes();
        let logits = self.batch_logits(theta);
        let total: f64 = logits
            .chunks_exact(classes)
            .zip(&self.batch.labels)
            .map(|(z, &label)| Self::log_softmax_nll(z, label))
            .sum();
        total / self.batch.len() as f64
    }

    fn gradient(&self, theta: &[f64]) -> Option<ParamVector> {
        assert_eq!(theta.len(), self.dim(), "parameter vector length");
        let layout: Vec<(usize, usize, usize)> = self.spec.layout().collect();
        let mut grad = vec![0.0; theta.len()];
        let mut acts = Vec::with_capacity(self.spec.layer_sizes.len());
        let inv_b = 1.0 / self.batch.len() as f64;
        for i in 0..self.batch.len() {
            self.forward(theta, self.batch.row(i), &mut acts);
            // d loss / d logits = softmax - onehot
            let logits = acts.last().expect("output layer");
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
            let sum: f64 = exps.iter().sum();
            let mut delta: Vec<f64> = exps.iter().map(|e| e / sum * inv_b).collect();
            delta[self.batch.labels[i]] -= inv_b;

            for l in (0..layout.len()).rev() {
                let (fan_in, fan_out, off) = layout[l];
                let input = &acts[l];
                let (gw, rest) = grad[off..off + (fan_in + 1) * fan_out].split_at_mut(fan_in * fan_out);
                for j in 0..fan_out {
                    let dj = delta[j];
                    rest[j] += dj;
                    for (g, a) in gw[j * fan_in..(j + 1) * fan_in].iter_mut().zip(input) {
                        *g += dj * a;
                    }
                }
                if l > 0 {
                    let w = &theta[off..off + fan_in * fan_out];
                    let mut prev = vec![0.0; fan_in];
                    for j in 0..fan_out {
                        let dj = delta[j];
                        for (p, wji) in prev.iter_mut().zip(&w[j * fan_in..(j + 1) * fan_in]) {
                            *p += dj * wji;
                        }
                    }
                    for (p, a) in prev.iter_mut().zip(input) {
                        *p *= 1.0 - a * a;
                    }
                    delta = prev;
                }
            }
        }
        Some(grad.into())
    }
}
