use super::Objective;
use crate::error::{Error, Result};
use crate::linalg::{dot_unchecked, ParamVector};

/// `f(theta) = <c, theta>`
#[derive(Clone, Debug)]
pub struct LinearObjective {
    c: ParamVector,
}

impl LinearObjective {
    pub fn new(c: ParamVector) -> Result<Self> {
        if c.norm() == 0.0 {
            return Err(Error::DegenerateObjective("linear objective needs a nonzero gradient"));
        }
        if !c.is_finite() {
            return Err(Error::DegenerateObjective("linear objective gradient must be finite"));
        }
        Ok(LinearObjective { c })
    }

    pub fn coefficients(&self) -> &ParamVector {
        &self.c
    }
}

pub fn linear_objective(c: ParamVector) -> Result<LinearObjective> {
    LinearObjective::new(c)
}

impl Objective for LinearObjective {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        dot_unchecked(&self.c, theta)
    }

    fn gradient(&self, _theta: &[f64]) -> Option<ParamVector> {
        Some(self.c.clone())
    }
}
