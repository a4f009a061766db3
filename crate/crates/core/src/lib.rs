//! Lossy compression of single-lead ECG in raw ADC units.
//!
//! [`inlc`] streams fragments matched against a bank of earlier output.
//! The beat-based baselines are [`od`] (codebook grown online), [`gsvq`]
//! (trained gain-shape codebook plus residual correction) and [`pca`]
//! (per-chunk principal components). Every codec reports its exact size in
//! bits, serializes through [`wire`], and is scored by [`metrics`].
//! [`bench`] sweeps parameters over record sets into versioned CSV.
//!
//! ```
//! use ecgsq::inlc::{inlc_compress, inlc_decompress, total_bits, InlcConfig};
//! use ecgsq::synth::{synthetic_ecg, SynthConfig};
//!
//! let x = synthetic_ecg(3600, &SynthConfig::default());
//! let cfg = InlcConfig::default().with_eps(10.0);
//! let msgs = inlc_compress(&x, &cfg).unwrap();
//! let y = inlc_decompress(&msgs, &cfg).unwrap();
//! assert_eq!(y.len(), x.len());
//! assert!(total_bits(&msgs) < 16 * x.len());
//! ```

// Parameter checks negate comparisons on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod bitstream;
pub mod corpus;
pub mod distance;
pub mod error;
pub mod gsvq;
pub mod inlc;
pub mod linalg;
pub mod metrics;
pub mod normalize;
pub mod od;
pub mod pca;
pub mod rpeak;
pub mod signal;
pub mod synth;
pub mod wire;

pub use error::{Error, Result};
