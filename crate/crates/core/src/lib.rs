//! Reference-free scoring of summaries against their source documents.
//!
//! A scorer maps a (document, summary) pair to a score in `[0, 1]`. Training
//! data needs no human annotation: negatives are made by pairing documents
//! with other documents' summaries, or by mutating a gold summary so that the
//! label is one minus the mutated fraction.
//!
//! The pipeline runs in this order:
//!
//! 1. [`corpus`] loads documents and summaries and splits them by document;
//! 2. [`sampler`] builds labeled samples;
//! 3. [`encoder`] turns pairs into fixed-shape vectors;
//! 4. [`model`] trains a small head on top and exposes the scoring function;
//! 5. [`evalharness`] evaluates scorers and aligns them with human judgments,
//!    using [`metrics`] for correlations and ROUGE baselines.

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod evalharness;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod synth;
pub mod textproc;

pub use error::{Error, ErrorClass, Result};
