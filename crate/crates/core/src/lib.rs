//! Linear baselines for multi-class and multi-label text classification.
//!
//! The pipeline is: load a [`corpus::Dataset`], fit a TF-IDF
//! [`features::Vocabulary`], train one binary linear SVM per label with
//! dual coordinate descent ([`linear`]), combine them with one of the
//! [`strategies`] (one-vs-rest, thresholding, cost-sensitive), and score
//! predictions with Micro-F1 and Macro-F1 ([`metrics`]).

pub mod corpus;
pub mod error;
pub mod features;
pub mod linear;
pub mod metrics;
pub mod pipeline;
pub mod strategies;

pub use error::{Error, ErrorKind, Result};
