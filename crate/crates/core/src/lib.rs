//! Batch analysis of how news topics move between text platforms.
//!
//! The pipeline is split into independent stages:
//!
//! - [`corpus`]: ingest line-delimited records, clean text, segment articles
//!   into paragraphs and run hyperlink analytics.
//! - [`vectors`]: unit-norm embedding blocks, the `EMB1` binary format and
//!   exact blocked cosine threshold search.
//! - [`simindex`]: directional correspondence fractions, the geometric-mean
//!   platform similarity matrix and the threshold precision sweep.
//! - [`dpmeans`]: deterministic spherical DP-Means topic clustering.
//! - [`topicflow`]: day-granular origin attribution and spread curves.
//! - [`hawkes`]: discrete-time multivariate Hawkes processes fit by Gibbs
//!   sampling with latent parent attribution.
//!
//! [`synth`] generates planted corpora used by the tests, the bundled
//! end-to-end fixture and the browser demo.

pub mod corpus;
pub mod dpmeans;
mod error;
pub mod hawkes;
pub mod simindex;
pub mod synth;
pub mod topicflow;
pub mod vectors;

pub use error::{Error, ErrorCategory, Result};

/// Deterministic 64-bit mixer (splitmix64 finalizer) used to derive
/// independent RNG seeds from a global seed and a stream key.
pub fn mix_seed(seed: u64, key: u64) -> u64 {
    let mut z = seed ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
