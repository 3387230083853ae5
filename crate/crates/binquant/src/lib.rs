//! Binary data quantization: learn compact binary codes for real-valued
//! feature vectors so that Hamming distance approximates Euclidean
//! neighborhood structure.
//!
//! The centerpiece is an adaptively trained cosine mapping ([`atq`]): a
//! projection matrix learned by conjugate-gradient descent on a grouping
//! objective over centered cosine features ([`optim`]), followed by a
//! closed-form per-bit offset fit. Four classic quantizers ride along for
//! comparison ([`baselines`]): random-projection hashing (LSH), cosine
//! quantization with random projections (CQ), spectral hashing (SH), and
//! iterative quantization (ITQ).
//!
//! Around the quantizers sit an exact Hamming-distance search index
//! ([`index`]), a retrieval-evaluation harness with mean-average-precision
//! sweeps ([`eval`]), and bit-exact file formats for features, codes, and
//! models ([`io`]).
//!
//! Everything is deterministic given a seed: randomness flows from one
//! documented generator ([`rng`]) and every fit records the seed that
//! produced it.
//!
//! ```
//! use binquant::{fit, FeatureMatrix, FitConfig, Method};
//! use nalgebra::DMatrix;
//!
//! let x = FeatureMatrix::new(DMatrix::from_fn(8, 100, |i, j| {
//!     ((i * 31 + j * 17) % 97) as f64 / 97.0
//! }))?;
//! let model = fit(Method::Atq, &x, 16, 7, &FitConfig::default())?;
//! let codes = model.encode(&x)?;
//! assert_eq!(codes.len(), 100);
//! assert_eq!(codes.r(), 16);
//! # Ok::<(), binquant::Error>(())
//! ```

pub mod atq;
pub mod baselines;
pub mod error;
pub mod eval;
pub mod index;
pub mod io;
pub mod model;
pub mod optim;
pub mod primitives;
pub mod rng;

pub use error::{Error, Result};
pub use model::{fit, fit_with_trace, FitConfig, Method, Model};
pub use primitives::{FeatureMatrix, Preprocess, PreprocessKind, ProjectionModel};
pub use rng::{derive_seed, RandomSource};
