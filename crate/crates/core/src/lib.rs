//! Embedded Bayesian network classifiers.
//!
//! A classifier is an inner Bayesian network over a class `Y` and its inputs,
//! used only through `p(y | x)`. The crate computes its log odds, its exact
//! model dimension with a non-redundant parameterization, BIC and Laplace
//! scores, and structure/feature selection by exhaustive search.

pub mod cli;
pub mod configs;
pub mod dataset;
pub mod dimension;
pub mod ebnc;
pub mod error;
pub mod exact;
pub mod network;
pub mod numfmt;
pub mod oracle;
pub mod scoring;
pub mod search;
pub mod structures;

pub use error::{Error, ErrorKind, Result};
