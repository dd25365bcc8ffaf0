//! Random orthonormal frames, optionally restricted to the orthogonal
//! complement of a fixed subspace.
//!
//!     cargo run --release --example orthogonal_sampling

use guided_es::linalg::{dot, gram_schmidt, sample_orthogonal_complement, sample_orthonormal, ParamVector, RngSeed, DROP_TOL};

fn main() -> guided_es::Result<()> {
    let n = 50;
    let basis = sample_orthonormal(n, 3, RngSeed(1))?;
    let frame = sample_orthogonal_complement(&basis, 5, RngSeed(2))?;

    let mut worst = 0.0f64;
    for d in frame.iter() {
        for b in basis.iter() {
            worst = worst.max(dot(d, b)?.abs());
        }
    }
    println!("max |<d, b>| between frame and basis: {worst:.2e}");

    let all = basis.concat(&frame)?;
    all.validate()?;
    println!("combined set of {} vectors is orthonormal", all.len());

    // dependent input: the third vector is the sum of the first two
    let mut rng = RngSeed(3).rng();
    let a = ParamVector::gaussian(n, &mut rng);
    let b = ParamVector::gaussian(n, &mut rng);
    let sum: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
    let out = gram_schmidt(n, &[a, b, sum.into()], DROP_TOL)?;
    println!("gram-schmidt kept {} of 3, dropped {}", out.set.len(), out.dropped);
    Ok(())
}
