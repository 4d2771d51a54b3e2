//! Question-classification benchmark toolkit: synthetic corpus generation,
//! TF-IDF featurization, seven from-scratch classifiers, stratified
//! cross-validation, and empirical complexity measurement.

pub mod bench;
pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod model;

pub use error::{QcError, Result};
