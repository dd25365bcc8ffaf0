//! Black-box objectives. Every objective can be evaluated; some also expose
//! an exact gradient so estimates can be scored against the truth.

mod linear;
mod mlp;
mod quadratic;

pub use linear::{linear_objective, LinearObjective};
pub use mlp::{flatten_params, init_params, unflatten_params, Batch, LayerParams, MlpObjective, MlpParams, MlpSpec};
pub use quadratic::{quadratic_objective, QuadraticObjective, QuadraticSpec};

use crate::linalg::ParamVector;

/// A scalar function of a parameter vector.
///
/// Implementations must be deterministic: equal inputs give bit-identical
/// outputs, whichever thread evaluates them.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, theta: &[f64]) -> f64;

    /// Exact gradient, when the objective can provide one.
    fn gradient(&self, _theta: &[f64]) -> Option<ParamVector> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, theta: &[f64]) -> f64 {
        (**self).value(theta)
    }
    fn gradient(&self, theta: &[f64]) -> Option<ParamVector> {
        (**self).gradient(theta)
    }
}

/// Central finite-difference derivative along coordinate `i`.
pub fn central_difference<F: Objective + ?Sized>(f: &F, theta: &[f64], i: usize, h: f64) -> f64 {
    let mut x = theta.to_vec();
    x[i] = theta[i] + h;
    let up = f.value(&x);
    x[i] = theta[i] - h;
    let down = f.value(&x);
    (up - down) / (2.0 * h)
}
