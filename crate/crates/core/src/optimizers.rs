//! First-order update rules fed by gradient estimates, plus rank-based
//! fitness shaping.
//!
//! Every step returns the applied update `theta_{t+1} - theta_t`, computed
//! from the stored parameters after the step so it is exact in floating
//! point. That update is what the surrogate history records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dims, ParamVector};

fn apply(theta: &mut [f64], step: impl Fn(usize) -> f64) -> ParamVector {
    theta
        .iter_mut()
        .enumerate()
        .map(|(i, t)| {
            let old = *t;
            *t = old + step(i);
            *t - old
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdState {
    pub learning_rate: f64,
}

impl SgdState {
    pub fn new(learning_rate: f64) -> Result<Self> {
        if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
            return Err(Error::Config(format!("learning rate must be finite and >= 0, got {learning_rate}")));
        }
        Ok(SgdState { learning_rate })
    }

    /// `theta -= lr * g`; returns the applied update.
    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) -> Result<ParamVector> {
        check_dims(theta.len(), g.len())?;
        let lr = self.learning_rate;
        Ok(apply(theta, |i| -lr * g[i]))
    }
}

pub fn sgd_step(state: &mut SgdState, theta: &[f64], g: &[f64]) -> Result<(ParamVector, ParamVector)> {
    let mut next = theta.to_vec();
    let update = state.step(&mut next, g)?;
    Ok((next.into(), update))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub first_moment: ParamVector,
    pub second_moment: ParamVector,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(dim: usize, learning_rate: f64) -> Result<Self> {
        if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
            return Err(Error::Config(format!("learning rate must be finite and >= 0, got {learning_rate}")));
        }
        Ok(AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: ParamVector::zeros(dim),
            second_moment: ParamVector::zeros(dim),
            step_count: 0,
        })
    }

    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) -> Result<ParamVector> {
        check_dims(self.first_moment.len(), theta.len())?;
        check_dims(theta.len(), g.len())?;
        self.step_count += 1;
        let t = self.step_count as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        for ((m, v), gi) in self.first_moment.iter_mut().zip(self.second_moment.iter_mut()).zip(g) {
            *m = b1 * *m + (1.0 - b1) * gi;
            *v = b2 * *v + (1.0 - b2) * gi * gi;
        }
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let (lr, eps) = (self.learning_rate, self.epsilon);
        let (m, v) = (&self.first_moment, &self.second_moment);
        Ok(apply(theta, |i| -lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps)))
    }
}

pub fn adam_step(state: &mut AdamState, theta: &[f64], g: &[f64]) -> Result<(ParamVector, ParamVector)> {
    let mut next = theta.to_vec();
    let update = state.step(&mut next, g)?;
    Ok((next.into(), update))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Either optimizer behind one interface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Optimizer {
    Sgd(SgdState),
    Adam(AdamState),
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, dim: usize, learning_rate: f64) -> Result<Self> {
        Ok(match kind {
            OptimizerKind::Sgd => Optimizer::Sgd(SgdState::new(learning_rate)?),
            OptimizerKind::Adam => Optimizer::Adam(AdamState::new(dim, learning_rate)?),
        })
    }

    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) -> Result<ParamVector> {
        match self {
            Optimizer::Sgd(s) => s.step(theta, g),
            Optimizer::Adam(s) => s.step(theta, g),
        }
    }
}

/// Centered-rank transform onto [-0.5, 0.5].
///
/// Values are ranked ascending; tied values share their average rank, so an
/// all-equal input maps to zeros. The output always sums to zero.
pub fn fitness_shape(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    if m <= 1 {
        return vec![0.0; m];
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; m];
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end - 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    let scale = (m - 1) as f64;
    ranks.iter().map(|r| r / scale - 0.5).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sgd_examples() {
        let mut s = SgdState::new(0.1).unwrap();
        let (theta, upd) = sgd_step(&mut s, &[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((theta[0] - 0.9).abs() < 1e-15 && theta[1] == 1.0);
        assert!((upd[0] + 0.1).abs() < 1e-15 && upd[1] == 0.0);

        let (theta, upd) = sgd_step(&mut s, &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(theta.as_slice(), &[1.0, 2.0]);
        assert_eq!(upd.as_slice(), &[0.0, 0.0]);
        assert!(sgd_step(&mut s, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sgd_on_linear_objective_decreases_by_lr_c_squared() {
        let c = [3.0, -4.0];
        let lr = 0.01;
        let mut s = SgdState::new(lr).unwrap();
        let mut theta = vec![0.5, 0.5];
        let f = |t: &[f64]| c[0] * t[0] + c[1] * t[1];
        for _ in 0..2 {
            let before = f(&theta);
            s.step(&mut theta, &c).unwrap();
            assert!((before - f(&theta) - lr * 25.0).abs() < 1e-12);
        }
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut a = AdamState::new(3, 0.001).unwrap();
        let g = [2.0, -0.5, 0.0];
        let (_, upd) = adam_step(&mut a, &[0.0; 3], &g).unwrap();
        // t=1: m_hat = g, v_hat = g^2, update = -lr g / (|g| + eps)
        for i in 0..2 {
            let expected = -0.001 * g[i] / (g[i].abs() + 1e-8);
            assert!((upd[i] - expected).abs() < 1e-15);
            assert!((upd[i].abs() - 0.001).abs() < 1e-10);
        }
        assert_eq!(upd[2], 0.0);
        assert_eq!(a.step_count, 1);
    }

    #[test]
    fn adam_zero_gradient_never_moves() {
        let mut a = AdamState::new(2, 0.1).unwrap();
        let mut theta = vec![1.0, -1.0];
        for _ in 0..50 {
            let u = a.step(&mut theta, &[0.0, 0.0]).unwrap();
            assert_eq!(u.as_slice(), &[0.0, 0.0]);
        }
        assert_eq!(theta, vec![1.0, -1.0]);
        assert_eq!(a.step_count, 50);
    }

    #[test]
    fn adam_constant_gradient_converges_to_sign_step() {
        let mut a = AdamState::new(2, 0.01).unwrap();
        let mut theta = vec![0.0, 0.0];
        let mut last = ParamVector::zeros(2);
        for _ in 0..5000 {
            last = a.step(&mut theta, &[0.3, -7.0]).unwrap();
        }
        assert!((last[0] + 0.01).abs() < 1e-6);
        assert!((last[1] - 0.01).abs() < 1e-6);
    }

    #[test]
    fn update_is_exact_parameter_difference() {
        let mut opt = Optimizer::new(OptimizerKind::Adam, 3, 0.003).unwrap();
        let mut theta = vec![0.1, 1e8, -3.3];
        for k in 0..5 {
            let before = theta.clone();
            let g = [1.0 + k as f64, -0.1, 1e-3];
            let u = opt.step(&mut theta, &g).unwrap();
            for i in 0..3 {
                assert_eq!(theta[i] - before[i], u[i]);
            }
        }
    }

    #[test]
    fn adam_state_serialization_is_bit_exact() {
        let mut a = AdamState::new(4, 0.001).unwrap();
        let mut theta = vec![0.3, -0.7, 1.1, 0.0];
        for k in 0..7 {
            a.step(&mut theta, &[0.1 * k as f64, -1.0 / 3.0, 2.0f64.sqrt(), 1e-300]).unwrap();
        }
        let text = serde_json::to_string(&a).unwrap();
        let back: AdamState = serde_json::from_str(&text).unwrap();
        for (x, y) in a.first_moment.iter().zip(back.first_moment.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.second_moment.iter().zip(back.second_moment.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a, back);
    }

    #[test]
    fn fitness_shape_examples() {
        assert_eq!(fitness_shape(&[3.0, 1.0, 2.0]), vec![0.5, -0.5, 0.0]);
        assert_eq!(fitness_shape(&[4.0, 4.0, 4.0, 4.0]), vec![0.0; 4]);
        assert_eq!(fitness_shape(&[7.0]), vec![0.0]);
        assert_eq!(fitness_shape(&[]), Vec::<f64>::new());
    }

    proptest! {
        #[test]
        fn fitness_shape_properties(values in prop::collection::vec(-1e6f64..1e6, 1..64), a in 0.01f64..100.0, b in -1e3f64..1e3) {
            let s = fitness_shape(&values);
            prop_assert!(s.iter().sum::<f64>().abs() < 1e-12);
            prop_assert!(s.iter().all(|x| (-0.5..=0.5).contains(x)));
            for i in 0..values.len() {
                for j in 0..values.len() {
                    if values[i] < values[j] {
                        prop_assert!(s[i] < s[j]);
                    }
                }
            }
            let shifted: Vec<f64> = values.iter().map(|v| a * v + b).collect();
            // rank-level invariance: the order (and hence output) is unchanged
            // whenever the affine map preserves strict order in floating point
            let order_kept = (0..values.len()).all(|i| (0..values.len()).all(|j| {
                values[i].partial_cmp(&values[j]) == shifted[i].partial_cmp(&shifted[j])
            }));
            if order_kept {
                prop_assert_eq!(fitness_shape(&shifted), s);
            }
        }
    }
}
