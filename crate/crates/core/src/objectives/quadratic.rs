use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{Error, Result};
use crate::linalg::{check_dims, dot_unchecked, sample_orthonormal, ParamVector, RngSeed};

/// Quadratic with a Hessian `R diag(eigenvalues) R^T`, where `R` is a random
/// rotation drawn from `rotation_seed`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadraticSpec {
    pub hessian_eigenvalues: Vec<f64>,
    pub rotation_seed: RngSeed,
    pub linear_term: ParamVector,
}

/// `f(theta) = 1/2 theta^T H theta + b^T theta`
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    n: usize,
    hessian: Vec<f64>,
    b: ParamVector,
}

impl QuadraticObjective {
    pub fn from_spec(spec: &QuadraticSpec) -> Result<Self> {
        let n = spec.hessian_eigenvalues.len();
        if n == 0 {
            return Err(Error::Domain("quadratic objective needs at least one eigenvalue".into()));
        }
        check_dims(n, spec.linear_term.len())?;
        if spec.hessian_eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::Domain("Hessian eigenvalues must be finite".into()));
        }
        let rot = sample_orthonormal(n, n, spec.rotation_seed)?;
        let mut hessian = vec![0.0; n * n];
        for (lambda, r) in spec.hessian_eigenvalues.iter().zip(rot.directions()) {
            if *lambda == 0.0 {
                continue;
            }
            for i in 0..n {
                let s = lambda * r[i];
                let row = &mut hessian[i * n..(i + 1) * n];
                for (h, rj) in row.iter_mut().zip(r.iter()) {
                    *h += s * rj;
                }
            }
        }
        // symmetrize away rounding asymmetry
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (hessian[i * n + j] + hessian[j * n + i]);
                hessian[i * n + j] = m;
                hessian[j * n + i] = m;
            }
        }
        Ok(QuadraticObjective { n, hessian, b: spec.linear_term.clone() })
    }

    /// Builds the objective from an explicit symmetric Hessian (row-major).
    pub fn from_hessian(hessian: Vec<f64>, b: ParamVector) -> Result<Self> {
        let n = b.len();
        check_dims(n * n, hessian.len())?;
        Ok(QuadraticObjective { n, hessian, b })
    }

    pub fn hessian(&self) -> &[f64] {
        &self.hessian
    }

    /// `H v`
    pub fn hessian_times(&self, v: &[f64]) -> ParamVector {
        (0..self.n).map(|i| dot_unchecked(&self.hessian[i * self.n..(i + 1) * self.n], v)).collect()
    }
}

pub fn quadratic_objective(spec: &QuadraticSpec) -> Result<QuadraticObjective> {
    QuadraticObjective::from_spec(spec)
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let h = self.hessian_times(theta);
        0.5 * dot_unchecked(theta, &h) + dot_unchecked(&self.b, theta)
    }

    fn gradient(&self, theta: &[f64]) -> Option<ParamVector> {
        let mut g = self.hessian_times(theta);
        for (gi, bi) in g.iter_mut().zip(self.b.iter()) {
            *gi += bi;
        }
        Some(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{central_difference, linear_objective};

    fn spec(eigs: Vec<f64>, b: Vec<f64>, seed: u64) -> QuadraticSpec {
        QuadraticSpec { hessian_eigenvalues: eigs, rotation_seed: RngSeed(seed), linear_term: b.into() }
    }

    #[test]
    fn identity_hessian() {
        let f = quadratic_objective(&spec(vec![1.0, 1.0], vec![0.0, 0.0], 3)).unwrap();
        assert!((f.value(&[1.0, 1.0]) - 1.0).abs() < 1e-12);
        let g = f.gradient(&[1.0, 1.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_hessian_is_linear() {
        let c = vec![0.5, -2.0, 3.0];
        let q = quadratic_objective(&spec(vec![0.0; 3], c.clone(), 1)).unwrap();
        let l = linear_objective(c.into()).unwrap();
        let theta = [1.5, 0.25, -4.0];
        assert_eq!(q.value(&theta), l.value(&theta));
        assert_eq!(q.gradient(&theta), l.gradient(&theta));
    }

    #[test]
    fn gradient_difference_is_hessian_times_step() {
        let n = 12;
        let eigs: Vec<f64> = (0..n).map(|i| 0.1 + i as f64).collect();
        let mut rng = RngSeed(8).rng();
        let f = quadratic_objective(&spec(eigs, ParamVector::gaussian(n, &mut rng).into_inner(), 4)).unwrap();
        let theta = ParamVector::gaussian(n, &mut rng);
        let step = ParamVector::gaussian(n, &mut rng);
        let moved: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let diff: Vec<f64> = f.gradient(&moved).unwrap().iter().zip(f.gradient(&theta).unwrap().iter()).map(|(a, b)| a - b).collect();
        let hz = f.hessian_times(&step);
        let scale = hz.norm();
        for (d, h) in diff.iter().zip(hz.iter()) {
            assert!((d - h).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn equal_eigenvalues_scale_the_step() {
        let lambda = 2.5;
        let n = 6;
        let f = quadratic_objective(&spec(vec![lambda; n], vec![0.0; n], 5)).unwrap();
        let theta = vec![0.3; n];
        let step = vec![1.0, -1.0, 0.5, 0.0, 2.0, -0.5];
        let moved: Vec<f64> = theta.iter().zip(&step).map(|(a, b)| a + b).collect();
        let g1 = f.gradient(&moved).unwrap();
        let g0 = f.gradient(&theta).unwrap();
        for i in 0..n {
            assert!((g1[i] - g0[i] - lambda * step[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let n = 8;
        let mut rng = RngSeed(10).rng();
        let eigs: Vec<f64> = (0..n).map(|i| -1.0 + 0.5 * i as f64).collect();
        let f = quadratic_objective(&spec(eigs, ParamVector::gaussian(n, &mut rng).into_inner(), 2)).unwrap();
        let theta = ParamVector::gaussian(n, &mut rng);
        let g = f.gradient(&theta).unwrap();
        for i in 0..n {
            let fd = central_difference(&f, &theta, i, 1e-4);
            assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-8) + 1e-9, "coord {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn mismatched_linear_term_rejected() {
        assert!(quadratic_objective(&spec(vec![1.0, 2.0], vec![1.0], 0)).is_err());
    }
}
