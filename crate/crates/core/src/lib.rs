//! Stylometric authorship attribution.
//!
//! The crate takes token-annotated verse documents through the whole
//! attribution pipeline:
//!
//! - [`corpus`]: token-file and manifest parsing, normalization, filtering
//! - [`features`]: lemma, rhyme-lemma, word-form, affix, POS n-gram and
//!   function-word matrices
//! - [`selection`]: minimum-sample-size reliability selection and
//!   frequency-rank cutoffs
//! - [`metrics`]: z-score / tfsd transforms, Burrows' delta and MinMax
//! - [`cluster`]: Ward clustering, agglomerative coefficient, tree cuts
//! - [`evaluate`]: cluster purity, η² with F-test p-values, robustness sweeps
//!
//! [`pipeline`] ties these together and [`synth`] generates seeded test
//! corpora. All outputs are deterministic for identical inputs.

// NaN must fail these guards, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cluster;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod export;
pub mod features;
pub mod metrics;
pub mod numfmt;
pub mod pipeline;
pub mod selection;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
