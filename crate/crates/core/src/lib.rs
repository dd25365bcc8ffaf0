//! Evolution-strategy gradient estimation that reuses past parameter updates
//! as surrogate gradient directions.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: parameter vectors, orthonormal direction sets, seeded RNG.
//! * [`objectives`]: linear, quadratic and MLP classification objectives.
//! * [`estimators`]: antithetic ES and the guided (surrogate) estimator.
//! * [`optimizers`]: SGD, Adam and rank-based fitness shaping.
//! * [`theory`]: closed-form convergence quantities and their Monte-Carlo checks.
//! * [`dataset`]: MNIST IDX parsing, synthetic blobs, seeded batching.
//! * [`experiment`]: configuration, training loops and report files.
//!
//! ```
//! use guided_es::estimators::{guided_gradient, EstimatorConfig};
//! use guided_es::linalg::{cosine, OrthoSet, RngSeed};
//! use guided_es::objectives::linear_objective;
//!
//! let f = linear_objective(vec![1.0, 2.0, -1.0, 0.5].into()).unwrap();
//! let cfg = EstimatorConfig { p_random: 2, k_history: 0, ..Default::default() };
//! let est = guided_gradient(&f, &[0.0; 4], &OrthoSet::empty(4), &cfg, RngSeed(7)).unwrap();
//! assert!(cosine(&est.direction, f.coefficients()).unwrap() > 0.0);
//! ```

pub mod dataset;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod linalg;
pub mod objectives;
pub mod optimizers;
pub mod theory;

pub use error::{Error, Result};
