//! Dense vector arithmetic and sampling of pairwise-orthonormal direction sets.
//!
//! Orthonormal sets are drawn by orthogonalizing standard-Gaussian columns
//! (two passes of modified Gram-Schmidt). A Gaussian vector projected onto a
//! subspace stays rotation-invariant inside it, so every direction of the
//! result is marginally uniform on the unit sphere of the admissible subspace.

use std::ops::{Deref, DerefMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum |<d_i, d_j>| tolerated between members of an [`OrthoSet`].
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Maximum | |d_i| - 1 | tolerated for members of an [`OrthoSet`].
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Relative residual below which Gram-Schmidt drops an input vector.
pub const DROP_TOL: f64 = 1e-10;

const MAX_REDRAWS: usize = 8;

/// The random number generator behind every seeded stream in the crate.
pub type SeededRng = ChaCha8Rng;

/// Root of a deterministic random stream.
///
/// ChaCha8 is platform independent, so equal seeds give bit-identical
/// streams everywhere. Parallel work never shares a stream; it derives child
/// seeds with [`RngSeed::derive`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> SeededRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Child seed for an independent sub-stream identified by `stream`.
    pub fn derive(self, stream: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(stream.wrapping_add(0x243F_6A88_85A3_08D3))))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Dense parameter / direction vector.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(n: usize) -> Self {
        ParamVector(vec![0.0; n])
    }

    /// Standard basis vector e_i in R^n.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        ParamVector(v)
    }

    pub fn gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        ParamVector((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, alpha: f64) -> ParamVector {
        ParamVector(self.0.iter().map(|x| alpha * x).collect())
    }

    /// Unit vector in the same direction.
    pub fn normalized(&self) -> Result<ParamVector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateVector("cannot normalize a zero or non-finite vector"));
        }
        Ok(self.scaled(1.0 / n))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        ParamVector(v.to_vec())
    }
}

impl FromIterator<f64> for ParamVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        ParamVector(iter.into_iter().collect())
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    Ok(dot_unchecked(a, b))
}

/// Four independent partial sums, so the compiler can vectorize the loop.
#[inline]
pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

pub fn norm(a: &[f64]) -> f64 {
    dot_unchecked(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Cosine of the angle between `a` and `b`, clamped to [-1, 1].
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let ab = dot(a, b)?;
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateVector("cosine of a zero-norm vector"));
    }
    Ok((ab / (na * nb)).clamp(-1.0, 1.0))
}

/// Ordered set of pairwise-orthonormal directions in R^dim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthoSet {
    dim: usize,
    directions: Vec<ParamVector>,
}

impl OrthoSet {
    pub fn empty(dim: usize) -> Self {
        OrthoSet { dim, directions: Vec::new() }
    }

    /// Wraps directions that are already orthonormal, verifying the set
    /// invariants.
    pub fn from_orthonormal(dim: usize, directions: Vec<ParamVector>) -> Result<Self> {
        let set = OrthoSet { dim, directions };
        set.validate()?;
        Ok(set)
    }

    /// Checks unit norms, pairwise orthogonality and the count bound.
    pub fn validate(&self) -> Result<()> {
        if self.directions.len() > self.dim {
            return Err(Error::SubspaceTooSmall {
                requested: self.directions.len(),
                available: self.dim,
            });
        }
        for (i, d) in self.directions.iter().enumerate() {
            check_dims(self.dim, d.len())?;
            if (d.norm() - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::DegenerateVector("direction is not unit norm"));
            }
            for e in &self.directions[..i] {
                if dot_unchecked(d, e).abs() > ORTHOGONALITY_TOL {
                    return Err(Error::DegenerateVector("directions are not pairwise orthogonal"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[ParamVector] {
        &self.directions
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ParamVector> {
        self.directions.iter()
    }

    pub fn into_directions(self) -> Vec<ParamVector> {
        self.directions
    }

    /// Union of two sets that are jointly orthonormal.
    pub fn concat(&self, other: &OrthoSet) -> Result<OrthoSet> {
        check_dims(self.dim, other.dim)?;
        let mut directions = self.directions.clone();
        directions.extend(other.directions.iter().cloned());
        OrthoSet::from_orthonormal(self.dim, directions)
    }

    /// `<v, d_i>` for every direction.
    pub fn coefficients(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.dim, v.len())?;
        Ok(self.directions.iter().map(|d| dot_unchecked(v, d)).collect())
    }

    /// `sum_i coeffs[i] * d_i`
    pub fn combine(&self, coeffs: &[f64]) -> Result<ParamVector> {
        check_dims(self.directions.len(), coeffs.len())?;
        let mut out = ParamVector::zeros(self.dim);
        for (c, d) in coeffs.iter().zip(&self.directions) {
            axpy(*c, d, &mut out);
        }
        Ok(out)
    }
}

impl<'a> IntoIterator for &'a OrthoSet {
    type Item = &'a ParamVector;
    type IntoIter = std::slice::Iter<'a, ParamVector>;
    fn into_iter(self) -> Self::IntoIter {
        self.directions.iter()
    }
}

/// Orthogonal projection of `v` onto the span of `basis`.
pub fn project_onto_span(v: &[f64], basis: &OrthoSet) -> Result<ParamVector> {
    let coeffs = basis.coefficients(v)?;
    basis.combine(&coeffs)
}

/// Removes the components of `v` along `basis`. A second sweep runs when
/// the first one cancelled most of `v` (norm ratio below 1/sqrt(2)), which
/// keeps the result orthogonal to working precision even for nearly
/// dependent inputs.
fn orthogonalize(v: &mut [f64], basis: &[ParamVector]) {
    let sweep = |v: &mut [f64]| {
        for d in basis {
            let c = dot_unchecked(v, d);
            axpy(-c, d, v);
        }
    };
    let before = norm(v);
    sweep(v);
    if norm(v) < std::f64::consts::FRAC_1_SQRT_2 * before {
        sweep(v);
    }
}

/// Result of [`gram_schmidt`].
#[derive(Clone, Debug)]
pub struct Orthonormalized {
    pub set: OrthoSet,
    /// Number of inputs dropped as (numerically) linearly dependent.
    pub dropped: usize,
}

/// Orthonormalizes `vectors` in order. An input whose residual after removing
/// the previously accepted directions is below `tol * |input|` is dropped.
pub fn gram_schmidt(dim: usize, vectors: &[ParamVector], tol: f64) -> Result<Orthonormalized> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("gram_schmidt tolerance must be positive, got {tol}")));
    }
    let mut accepted: Vec<ParamVector> = Vec::with_capacity(vectors.len().min(dim));
    let mut dropped = 0;
    for v in vectors {
        check_dims(dim, v.len())?;
        let scale = v.norm();
        if scale == 0.0 || !scale.is_finite() || accepted.len() == dim {
            dropped += 1;
            continue;
        }
        let mut r = v.clone();
        orthogonalize(&mut r, &accepted);
        let rn = r.norm();
        if rn < tol * scale {
            dropped += 1;
            continue;
        }
        accepted.push(r.scaled(1.0 / rn));
    }
    Ok(Orthonormalized { set: OrthoSet { dim, directions: accepted }, dropped })
}

/// `p` orthonormal directions in R^n, each marginally uniform on the sphere.
pub fn sample_orthonormal(n: usize, p: usize, seed: RngSeed) -> Result<OrthoSet> {
    sample_orthonormal_with(n, p, &mut seed.rng())
}

pub fn sample_orthonormal_with<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<OrthoSet> {
    if p == 0 || n == 0 {
        return Err(Error::Domain(format!("sample_orthonormal needs 1 <= p <= n, got p={p}, n={n}")));
    }
    sample_orthogonal_complement_with(&OrthoSet::empty(n), p, rng)
}

/// `p` orthonormal directions orthogonal to every direction of `basis`,
/// uniform on the unit sphere of the orthogonal complement.
pub fn sample_orthogonal_complement(basis: &OrthoSet, p: usize, seed: RngSeed) -> Result<OrthoSet> {
    sample_orthogonal_complement_with(basis, p, &mut seed.rng())
}

pub fn sample_orthogonal_complement_with<R: Rng + ?Sized>(
    basis: &OrthoSet,
    p: usize,
    rng: &mut R,
) -> Result<OrthoSet> {
    let n = basis.dim();
    if basis.len() + p > n {
        return Err(Error::SubspaceTooSmall { requested: basis.len() + p, available: n });
    }
    let mut work: Vec<ParamVector> = basis.directions().to_vec();
    for _ in 0..p {
        let mut accepted = false;
        for _ in 0..=MAX_REDRAWS {
            let mut g = ParamVector::gaussian(n, rng);
            let scale = g.norm();
            orthogonalize(&mut g, &work);
            let rn = g.norm();
            if rn >= DROP_TOL * scale && rn > 0.0 {
                work.push(g.scaled(1.0 / rn));
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::SamplingFailed(MAX_REDRAWS));
        }
    }
    let directions = work.split_off(basis.len());
    Ok(OrthoSet { dim: n, directions })
}

/// A unit vector whose squared cosine with the unit vector `u` is exactly
/// `cos_sq`, rotated away from `u` along a uniformly random orthogonal
/// direction.
pub fn unit_with_cos_sq<R: Rng + ?Sized>(u: &[f64], cos_sq: f64, rng: &mut R) -> Result<ParamVector> {
    if !(0.0..=1.0).contains(&cos_sq) {
        return Err(Error::Domain(format!("squared cosine {cos_sq} outside [0, 1]")));
    }
    let uhat = ParamVector::from(u).normalized()?;
    let n = uhat.len();
    let mut out = uhat.scaled(cos_sq.sqrt());
    if cos_sq < 1.0 {
        let basis = OrthoSet::from_orthonormal(n, vec![uhat])?;
        let w = sample_orthogonal_complement_with(&basis, 1, rng)?;
        axpy((1.0 - cos_sq).sqrt(), &w.directions()[0], &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from(v)
    }

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(dot(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap(), 6.0);
        assert!((dot(&[0.6, 0.8], &[0.6, 0.8]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(dot(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - 0.7071067811865475).abs() < 1e-15);
        assert_eq!(cosine(&[2.0, 0.0], &[5.0, 0.0]).unwrap(), 1.0);
        // |proj| / |a| with proj = (1,2,0,0): sqrt(5) / sqrt(30)
        let expected = (5.0f64 / 30.0).sqrt();
        let direct = 5.0 / (30.0f64.sqrt() * 5.0f64.sqrt());
        assert!((expected - direct).abs() < 1e-15);
        assert!((cosine(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 0.0, 0.0]).unwrap() - expected).abs() < 1e-15);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::DegenerateVector(_))));
    }

    #[test]
    fn projection_examples() {
        let basis = OrthoSet::from_orthonormal(4, vec![ParamVector::unit(4, 0), ParamVector::unit(4, 1)]).unwrap();
        assert_eq!(project_onto_span(&[1.0, 2.0, 3.0, 4.0], &basis).unwrap().as_slice(), &[1.0, 2.0, 0.0, 0.0]);

        let full = sample_orthonormal(6, 6, RngSeed(3)).unwrap();
        let v = [0.3, -1.0, 2.5, 0.0, 7.0, -0.25];
        let p = project_onto_span(&v, &full).unwrap();
        for (a, b) in p.iter().zip(v) {
            assert!((a - b).abs() < 1e-9);
        }

        let line = OrthoSet::from_orthonormal(2, vec![pv(&[0.6, 0.8])]).unwrap();
        let p = project_onto_span(&[3.0, 4.0], &line).unwrap();
        assert!((p[0] - 3.0).abs() < 1e-12 && (p[1] - 4.0).abs() < 1e-12);

        assert!(project_onto_span(&[1.0, 2.0, 3.0], &basis).is_err());
    }

    #[test]
    fn gram_schmidt_examples() {
        let out = gram_schmidt(2, &[pv(&[2.0, 0.0]), pv(&[0.0, 3.0])], DROP_TOL).unwrap();
        assert_eq!(out.dropped, 0);
        assert_eq!(out.set.directions()[0].as_slice(), &[1.0, 0.0]);
        assert_eq!(out.set.directions()[1].as_slice(), &[0.0, 1.0]);

        let out = gram_schmidt(2, &[pv(&[1.0, 0.0]), pv(&[1.0, 1e-14])], 1e-10).unwrap();
        assert_eq!(out.set.len(), 1);
        assert_eq!(out.dropped, 1);

        let out = gram_schmidt(3, &[pv(&[1.0, 1.0, 0.0]), pv(&[1.0, 0.0, 0.0])], DROP_TOL).unwrap();
        assert_eq!(out.set.len(), 2);
        let d = out.set.directions();
        assert!(dot(&d[0], &d[1]).unwrap().abs() < 1e-12);
        assert!((d[0].norm() - 1.0).abs() < 1e-12 && (d[1].norm() - 1.0).abs() < 1e-12);

        let out = gram_schmidt(2, &[ParamVector::zeros(2)], DROP_TOL).unwrap();
        assert_eq!((out.set.len(), out.dropped), (0, 1));
        assert!(gram_schmidt(2, &[], 0.0).is_err());
    }

    #[test]
    fn sampling_shapes_and_errors() {
        let s = sample_orthonormal(3, 3, RngSeed(1)).unwrap();
        s.validate().unwrap();
        assert_eq!(s.len(), 3);
        assert!(matches!(sample_orthonormal(3, 4, RngSeed(1)), Err(Error::SubspaceTooSmall { .. })));

        let e1 = OrthoSet::from_orthonormal(3, vec![ParamVector::unit(3, 0)]).unwrap();
        let c = sample_orthogonal_complement(&e1, 2, RngSeed(9)).unwrap();
        c.validate().unwrap();
        for d in &c {
            assert!(d[0].abs() < 1e-10);
        }
        assert!(sample_orthogonal_complement(&e1, 3, RngSeed(9)).is_err());
    }

    #[test]
    fn empty_constraint_matches_plain_sampling() {
        let a = sample_orthonormal(10, 4, RngSeed(77)).unwrap();
        let b = sample_orthogonal_complement(&OrthoSet::empty(10), 4, RngSeed(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn same_seed_same_set() {
        let a = sample_orthonormal(33, 7, RngSeed(5)).unwrap();
        let b = sample_orthonormal(33, 7, RngSeed(5)).unwrap();
        let c = sample_orthonormal(33, 7, RngSeed(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    /// Mean of sum_i <u, d_i>^2 over `draws` sets, and its standard error.
    fn captured_energy(n: usize, p: usize, basis: Option<&OrthoSet>, u: &[f64], draws: usize, seed: u64) -> (f64, f64) {
        let mut rng = RngSeed(seed).rng();
        let empty = OrthoSet::empty(n);
        let basis = basis.unwrap_or(&empty);
        let xs: Vec<f64> = (0..draws)
            .map(|_| {
                let s = sample_orthogonal_complement_with(basis, p, &mut rng).unwrap();
                s.coefficients(u).unwrap().iter().map(|c| c * c).sum()
            })
            .collect();
        let m = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (draws - 1) as f64;
        (m, (var / draws as f64).sqrt())
    }

    #[test]
    fn uniformity_single_direction() {
        let u = ParamVector::unit(50, 7);
        let (m, se) = captured_energy(50, 1, None, &u, 20000, 11);
        assert!((m - 0.02).abs() < 0.002, "mean {m}");
        assert!((m - 0.02).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn uniformity_in_complement() {
        let mut rng = RngSeed(4).rng();
        let zeta = ParamVector::gaussian(101, &mut rng).normalized().unwrap();
        let basis = OrthoSet::from_orthonormal(101, vec![zeta.clone()]).unwrap();
        let frame = sample_orthogonal_complement_with(&basis, 1, &mut rng).unwrap();
        let (m, se) = captured_energy(101, 10, Some(&basis), &frame.directions()[0], 20000, 12);
        assert!((m - 0.1).abs() < 0.005, "mean {m}");
        assert!((m - 0.1).abs() < 3.0 * se);
    }

    #[test]
    fn unit_with_cos_sq_hits_target() {
        let mut rng = RngSeed(2).rng();
        let u = ParamVector::gaussian(20, &mut rng);
        for target in [0.0, 0.3, 1.0] {
            let v = unit_with_cos_sq(&u, target, &mut rng).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let c = cosine(&u, &v).unwrap();
            assert!((c * c - target).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_beats_random_span_members() {
        let mut rng = RngSeed(21).rng();
        let basis = sample_orthonormal_with(12, 4, &mut rng).unwrap();
        let v = ParamVector::gaussian(12, &mut rng);
        let best = cosine(&v, &project_onto_span(&v, &basis).unwrap()).unwrap();
        for _ in 0..10_000 {
            let a: Vec<f64> = (0..4).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let w = basis.combine(&a).unwrap();
            assert!(cosine(&v, &w).unwrap() <= best + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn sampled_sets_are_orthonormal(n in 1usize..=64, frac in 0.0f64..=1.0, seed in any::<u64>()) {
            let p = ((n as f64 * frac).ceil() as usize).clamp(1, n);
            let s = sample_orthonormal(n, p, RngSeed(seed)).unwrap();
            prop_assert_eq!(s.len(), p);
            prop_assert!(s.validate().is_ok());
        }

        #[test]
        fn gram_schmidt_output_is_orthonormal(n in 1usize..=24, m in 1usize..=30, seed in any::<u64>()) {
            let mut rng = RngSeed(seed).rng();
            let vs: Vec<ParamVector> = (0..m).map(|_| ParamVector::gaussian(n, &mut rng)).collect();
            let out = gram_schmidt(n, &vs, DROP_TOL).unwrap();
            prop_assert!(out.set.validate().is_ok());
            prop_assert_eq!(out.set.len() + out.dropped, m);
            prop_assert_eq!(out.set.len(), m.min(n));
        }

        #[test]
        fn projection_residual_is_orthogonal(n in 2usize..=32, seed in any::<u64>()) {
            let mut rng = RngSeed(seed).rng();
            let p = 1 + (seed as usize % n);
            let basis = sample_orthonormal_with(n, p, &mut rng).unwrap();
            let v = ParamVector::gaussian(n, &mut rng);
            let proj = project_onto_span(&v, &basis).unwrap();
            let resid: Vec<f64> = v.iter().zip(proj.iter()).map(|(a, b)| a - b).collect();
            for d in &basis {
                prop_assert!(dot(&resid, d).unwrap().abs() <= 1e-9 * v.norm());
            }
        }
    }
}
